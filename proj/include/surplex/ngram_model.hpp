#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "surplex/model.hpp"

namespace surplex {

// Interpolated add-k smoothed n-gram settings.
//
// Level weights are built from backoff_lambda: the full-order estimate gets
// lambda, each shorter context gets lambda times the remaining mass, and the
// unigram level absorbs the rest, so the weights always sum to exactly 1.
// For order 3: w3 = lambda, w2 = lambda(1-lambda), w1 = (1-lambda)^2.
// The defaults keep nearly all of the mass on the full-order estimate with
// only a whisper of smoothing. That calibration matters: heavier smoothing
// or flatter level weights constantly re-inject diversity, which caps how
// concentrated any conditional can get and masks the degradation this
// laboratory exists to measure.
struct NgramConfig {
  std::size_t order = 3;
  double alpha = 1e-4;           // add-k smoothing constant, > 0
  double backoff_lambda = 0.99;  // share of the highest available order, in (0,1]
  void validate() const;
};

// Count-based reference model. Fine-tuning adds weighted n-gram counts on
// top of the existing table, so repeated rounds reinforce whatever the model
// already prefers — which is exactly the feedback loop the simulator studies.
//
// The predicted support is every non-reserved vocabulary id, plus EOS/UNK
// once they have been observed in training. BOS is context-only. Querying
// the probability of a token outside the support is a hard error rather
// than a silent zero.
class NgramModel final : public LanguageModel {
 public:
  explicit NgramModel(std::shared_ptr<const Vocabulary> vocab,
                      NgramConfig config = {});

  ProbVector next_token_distribution(
      std::span<const TokenId> context) const override;
  ProbVector top_n_distribution(std::span<const TokenId> context,
                                std::size_t n = 100) const override;
  double sequence_logprob(std::span<const TokenId> tokens,
                          std::span<const TokenId> context) const override;
  std::vector<TokenId> generate_continuation(
      std::span<const TokenId> prompt, std::size_t max_new_tokens,
      const SamplingConfig& sampling) const override;
  void fine_tune(std::span<const Document> documents,
                 double weight = 1.0) override;
  std::unique_ptr<LanguageModel> clone() const override;
  const Vocabulary& vocab() const override { return *vocab_; }

  std::shared_ptr<const Vocabulary> vocab_ptr() const { return vocab_; }
  const NgramConfig& config() const { return config_; }

  // Inspection hooks for tests and tooling. `level` is 1 (unigram) through
  // order; `context` must hold exactly level-1 ids.
  double level_count(std::size_t level, std::span<const TokenId> context,
                     TokenId token) const;
  double level_total(std::size_t level, std::span<const TokenId> context) const;
  double level_weight(std::size_t level) const;
  std::span<const TokenId> support() const { return support_; }

  // Versioned JSON snapshot with the vocabulary embedded, so a snapshot file
  // alone is enough to score documents later.
  void save_snapshot(const std::string& path) const;
  static NgramModel load_snapshot(const std::string& path);

 private:
  struct ContextCounts {
    double total = 0.0;
    std::unordered_map<TokenId, double> by_token;
  };
  // Context key: the (level-1) context ids packed into a u32string.
  using Table = std::unordered_map<std::u32string, ContextCounts>;

  static std::u32string pack_key(std::span<const TokenId> context);
  // Last order-1 ids of (BOS padding ++ context).
  std::vector<TokenId> padded_context(std::span<const TokenId> context) const;
  // Probability of one in-support token given a padded context.
  double token_prob(std::span<const TokenId> padded, TokenId token) const;
  // Distribution over support_ given a padded context.
  std::vector<double> support_distribution(std::span<const TokenId> padded) const;
  // Top-n candidate indices into support_, probability-descending.
  std::vector<std::pair<TokenId, double>> top_candidates(
      std::span<const TokenId> padded, std::size_t n) const;
  void rebuild_support();

  std::shared_ptr<const Vocabulary> vocab_;
  NgramConfig config_;
  std::vector<double> weights_;  // weights_[l-1] = interpolation weight of level l
  std::vector<Table> levels_;    // levels_[l-1] = counts for level l
  std::vector<TokenId> support_;           // ascending token ids
  std::vector<std::uint32_t> support_pos_; // token id -> index into support_
  std::vector<double> unigram_probs_;      // smoothed unigram over support_
};

}  // namespace surplex
