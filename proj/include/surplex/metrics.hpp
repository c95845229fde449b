#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "surplex/corpus.hpp"
#include "surplex/model.hpp"

namespace surplex {

// Four-choice continuation item.
struct CiItem {
  std::vector<TokenId> prompt;
  std::array<std::vector<TokenId>, 4> candidates;  // each non-empty
  int correct_index = 0;                           // 0..3
};

// Parses line-delimited JSON {"prompt","candidates"[4],"correct"} items.
// Malformed lines are skipped and counted.
std::vector<CiItem> load_ci_items(const std::string& path,
                                  const Vocabulary& vocab,
                                  std::size_t* skipped = nullptr);

// A named batch of per-item values with mean and standard error
// (sample standard deviation / sqrt(count)).
struct MetricSample {
  std::string name;
  std::vector<double> values;
  double mean = 0.0;
  double std_error = 0.0;

  static MetricSample from_values(std::string name,
                                  std::vector<double> values);
};

// Shannon entropy of the document's token frequencies, normalized by
// log(unique-token count) into [0, 1]. A document with one distinct token
// has no diversity to measure: defined as 0.
double linguistic_entropy(std::span<const TokenId> tokens);
double linguistic_entropy(const Document& doc);

// Mean absolute difference Gini over the values exactly as given (top-n
// vectors are not renormalized; the sum in the denominator handles
// non-unit mass). All-zero input is a hard error.
double gini(std::span<const double> values);
double gini(const ProbVector& q);

// 1 iff some entry strictly exceeds tau.
int collapsed(const ProbVector& q, double tau = 0.99);

// exp of the mean negative log-likelihood per token, first token scored
// against a beginning-of-sequence context. Always >= 1 for proper models.
double surplexity(const LanguageModel& model, const Document& doc);
double surplexity(const LanguageModel& model, std::span<const TokenId> tokens);

struct CiOptions {
  bool length_normalized = true;  // mean per-token logprob vs raw sum
};

struct CiResult {
  double accuracy = 0.0;
  std::size_t tie_count = 0;           // items whose best score was shared
  std::vector<double> item_correct;    // 0/1 per item
};

// Picks argmax-scored candidate per item; ties resolve to the lowest index
// and are counted.
CiResult ci_accuracy(const LanguageModel& model, std::span<const CiItem> items,
                     const CiOptions& options = {});

struct NextTokenEvalOptions {
  std::size_t prompt_tokens = 32;
  std::size_t top_n = 100;
  double tau = 0.99;
  std::size_t threads = 1;
};

struct NextTokenEval {
  std::vector<double> gini_values;      // per eligible eval document
  std::vector<double> collapsed_flags;  // 0/1 per eligible eval document
  double mean_gini = 0.0;
  double collapsed_pct = 0.0;  // 100 * mean of collapsed_flags
  std::size_t skipped_short = 0;
};

// Truncates each eval document to prompt_tokens, takes the model's top-n
// distribution, and aggregates gini / collapsed over the batch. Documents
// shorter than the prompt are skipped and counted.
NextTokenEval eval_next_token(const LanguageModel& model,
                              std::span<const Document> eval_docs,
                              const NextTokenEvalOptions& options = {});

}  // namespace surplex
