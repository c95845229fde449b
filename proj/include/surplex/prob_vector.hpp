#pragma once

#include <cstddef>
#include <vector>

#include "surplex/tokenizer.hpp"

namespace surplex {

struct ProbEntry {
  TokenId token;
  double prob;
};

// Tolerance for "sums to one" checks on probability vectors.
constexpr double kProbSumTolerance = 1e-9;

// A next-token distribution, either over the model's full support
// (FullVocab) or truncated to the n most probable entries (TopN). TopN
// vectors keep their raw probabilities — no renormalization — because the
// downstream inequality metrics divide by the actual mass.
class ProbVector {
 public:
  enum class Scope { FullVocab, TopN };

  // entries: probabilities in [0,1] summing to 1 within kProbSumTolerance.
  static ProbVector full_vocab(std::vector<ProbEntry> entries);

  // entries: at most `limit`, sorted by descending probability, total mass
  // at most 1 + kProbSumTolerance.
  static ProbVector top_n(std::vector<ProbEntry> entries, std::size_t limit);

  Scope scope() const { return scope_; }
  std::size_t top_limit() const { return limit_; }  // TopN only
  const std::vector<ProbEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  double sum() const { return sum_; }
  double max_prob() const { return max_prob_; }

 private:
  ProbVector() = default;

  std::vector<ProbEntry> entries_;
  Scope scope_ = Scope::FullVocab;
  std::size_t limit_ = 0;
  double sum_ = 0.0;
  double max_prob_ = 0.0;
};

}  // namespace surplex
