#include "surplex/prob_vector.hpp"

#include <cmath>

#include "surplex/errors.hpp"

namespace surplex {
namespace {

void check_range(const std::vector<ProbEntry>& entries) {
  for (const ProbEntry& e : entries) {
    if (!(e.prob >= 0.0 && e.prob <= 1.0)) {
      throw Error("probability out of [0,1]: " + std::to_string(e.prob) +
                  " for token " + std::to_string(e.token));
    }
  }
}

double total_mass(const std::vector<ProbEntry>& entries) {
  double sum = 0.0;
  for (const ProbEntry& e : entries) sum += e.prob;
  return sum;
}

double max_entry(const std::vector<ProbEntry>& entries) {
  double best = 0.0;
  for (const ProbEntry& e : entries) best = std::max(best, e.prob);
  return best;
}

}  // namespace

ProbVector ProbVector::full_vocab(std::vector<ProbEntry> entries) {
  check_range(entries);
  const double sum = total_mass(entries);
  if (std::abs(sum - 1.0) > kProbSumTolerance) {
    throw Error("full-vocab distribution sums to " + std::to_string(sum) +
                ", expected 1");
  }
  ProbVector v;
  v.entries_ = std::move(entries);
  v.scope_ = Scope::FullVocab;
  v.limit_ = v.entries_.size();
  v.sum_ = sum;
  v.max_prob_ = max_entry(v.entries_);
  return v;
}

ProbVector ProbVector::top_n(std::vector<ProbEntry> entries, std::size_t limit) {
  check_range(entries);
  if (entries.size() > limit) {
    throw Error("top-n distribution has " + std::to_string(entries.size()) +
                " entries, limit " + std::to_string(limit));
  }
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (entries[i - 1].prob < entries[i].prob) {
      throw Error("top-n entries not sorted by descending probability");
    }
  }
  const double sum = total_mass(entries);
  if (sum > 1.0 + kProbSumTolerance) {
    throw Error("top-n distribution mass exceeds 1: " + std::to_string(sum));
  }
  ProbVector v;
  v.entries_ = std::move(entries);
  v.scope_ = Scope::TopN;
  v.limit_ = limit;
  v.sum_ = sum;
  v.max_prob_ = v.entries_.empty() ? 0.0 : v.entries_.front().prob;
  return v;
}

}  // namespace surplex
