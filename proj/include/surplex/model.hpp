#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "surplex/corpus.hpp"
#include "surplex/prob_vector.hpp"

namespace surplex {

struct SamplingConfig {
  double temperature = 0.8;
  std::size_t top_k = 40;
  std::uint64_t seed = 0;   // stream seed; callers derive one per prompt
  bool greedy = false;      // argmax decoding; temperature and seed unused
  bool stop_at_eos = true;
  void validate() const;    // temperature > 0, top_k >= 1
};

// Behavioral interface every backend implements. Read operations
// (distributions, logprobs, generation) are const and safe to call
// concurrently; fine_tune requires exclusive access.
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;

  // Next-token distribution given a context; empty context means a
  // beginning-of-sequence position.
  virtual ProbVector next_token_distribution(
      std::span<const TokenId> context) const = 0;

  // The n most probable next tokens, descending, ties broken by ascending
  // token id. Raw probabilities, not renormalized.
  virtual ProbVector top_n_distribution(std::span<const TokenId> context,
                                        std::size_t n = 100) const = 0;

  // Natural-log probability of `tokens` following `context` (chain rule).
  virtual double sequence_logprob(std::span<const TokenId> tokens,
                                  std::span<const TokenId> context) const = 0;

  // Autoregressive sampling with temperature and top-k truncation; stops at
  // EOS (not emitted) or max_new_tokens. Deterministic given sampling.seed.
  virtual std::vector<TokenId> generate_continuation(
      std::span<const TokenId> prompt, std::size_t max_new_tokens,
      const SamplingConfig& sampling) const = 0;

  // Accumulates weighted counts from the documents; prior state is kept, so
  // repeated calls mimic continued training.
  virtual void fine_tune(std::span<const Document> documents,
                         double weight) = 0;

  virtual std::unique_ptr<LanguageModel> clone() const = 0;
  virtual const Vocabulary& vocab() const = 0;
};

}  // namespace surplex
