#include "surplex/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include <json.hpp>

#include "surplex/errors.hpp"
#include "surplex/io.hpp"
#include "surplex/parallel.hpp"

namespace surplex {

std::vector<CiItem> load_ci_items(const std::string& path,
                                  const Vocabulary& vocab,
                                  std::size_t* skipped) {
  std::vector<CiItem> items;
  std::size_t bad = 0;
  for (const std::string& line : read_lines(path)) {
    nlohmann::json row = nlohmann::json::parse(line, nullptr, false);
    if (row.is_discarded() || !row.is_object() || !row.contains("prompt") ||
        !row.contains("candidates") || !row.contains("correct") ||
        !row["candidates"].is_array() || row["candidates"].size() != 4 ||
        !row["correct"].is_number_integer()) {
      ++bad;
      continue;
    }
    CiItem item;
    item.prompt = tokenize(row["prompt"].get<std::string>(), vocab);
    item.correct_index = row["correct"].get<int>();
    bool ok = item.correct_index >= 0 && item.correct_index < 4;
    for (std::size_t c = 0; ok && c < 4; ++c) {
      if (!row["candidates"][c].is_string()) {
        ok = false;
        break;
      }
      item.candidates[c] =
          tokenize(row["candidates"][c].get<std::string>(), vocab);
      if (item.candidates[c].empty()) ok = false;
    }
    if (!ok) {
      ++bad;
      continue;
    }
    items.push_back(std::move(item));
  }
  if (skipped) *skipped = bad;
  return items;
}

MetricSample MetricSample::from_values(std::string name,
                                       std::vector<double> values) {
  if (values.empty()) throw Error("metric sample '" + name + "' has no values");
  MetricSample sample;
  sample.name = std::move(name);
  sample.values = std::move(values);
  double sum = 0.0;
  for (double v : sample.values) sum += v;
  const double n = static_cast<double>(sample.values.size());
  sample.mean = sum / n;
  if (sample.values.size() > 1) {
    double ss = 0.0;
    for (double v : sample.values) {
      const double d = v - sample.mean;
      ss += d * d;
    }
    sample.std_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return sample;
}

double linguistic_entropy(std::span<const TokenId> tokens) {
  if (tokens.empty()) throw Error("entropy of an empty document");
  std::unordered_map<TokenId, std::size_t> counts;
  for (TokenId id : tokens) counts[id] += 1;
  if (counts.size() <= 1) return 0.0;
  const double m = static_cast<double>(tokens.size());
  double h = 0.0;
  for (const auto& [id, count] : counts) {
    const double q = static_cast<double>(count) / m;
    h -= q * std::log(q);
  }
  return h / std::log(static_cast<double>(counts.size()));
}

double linguistic_entropy(const Document& doc) {
  return linguistic_entropy(std::span<const TokenId>(doc.tokens));
}

double gini(std::span<const double> values) {
  if (values.empty()) throw Error("gini of an empty vector");
  double sum = 0.0;
  for (double v : values) {
    if (v < 0.0) throw Error("gini input must be non-negative");
    sum += v;
  }
  if (sum <= 0.0) throw Error("gini of an all-zero vector is undefined");
  // Sorted identity: sum_i sum_j |x_i - x_j| = 2 * sum_i (2i - n - 1) x_i
  // over ascending x with 1-based i. The coefficients sum to zero, so the
  // minimum can be subtracted from every value first; that keeps uniform
  // input at exactly 0 instead of accumulated rounding dust. O(n log n),
  // matches the double-sum form to floating-point accuracy.
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  const double floor = sorted.front();
  double weighted = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    weighted += (2.0 * static_cast<double>(i + 1) - n - 1.0) *
                (sorted[i] - floor);
  }
  return weighted / (n * sum);
}

double gini(const ProbVector& q) {
  std::vector<double> values;
  values.reserve(q.size());
  for (const ProbEntry& e : q.entries()) values.push_back(e.prob);
  return gini(values);
}

int collapsed(const ProbVector& q, double tau) {
  if (q.size() == 0) throw Error("collapse check on an empty distribution");
  return q.max_prob() > tau ? 1 : 0;
}

double surplexity(const LanguageModel& model, std::span<const TokenId> tokens) {
  if (tokens.empty()) throw Error("surplexity of an empty document");
  const double logprob = model.sequence_logprob(tokens, {});
  return std::exp(-logprob / static_cast<double>(tokens.size()));
}

double surplexity(const LanguageModel& model, const Document& doc) {
  return surplexity(model, std::span<const TokenId>(doc.tokens));
}

CiResult ci_accuracy(const LanguageModel& model, std::span<const CiItem> items,
                     const CiOptions& options) {
  if (items.empty()) throw Error("ci_accuracy needs at least one item");
  CiResult result;
  result.item_correct.reserve(items.size());
  for (const CiItem& item : items) {
    std::array<double, 4> scores{};
    for (std::size_t c = 0; c < 4; ++c) {
      const auto& candidate = item.candidates[c];
      if (candidate.empty()) throw Error("ci item has an empty candidate");
      double score = model.sequence_logprob(candidate, item.prompt);
      if (options.length_normalized) {
        score /= static_cast<double>(candidate.size());
      }
      scores[c] = score;
    }
    std::size_t best = 0;
    bool tied = false;
    for (std::size_t c = 1; c < 4; ++c) {
      if (scores[c] > scores[best]) {
        best = c;
        tied = false;
      } else if (scores[c] == scores[best]) {
        tied = true;  // lowest index keeps the win
      }
    }
    if (tied) ++result.tie_count;
    result.item_correct.push_back(
        best == static_cast<std::size_t>(item.correct_index) ? 1.0 : 0.0);
  }
  double sum = 0.0;
  for (double v : result.item_correct) sum += v;
  result.accuracy = sum / static_cast<double>(items.size());
  return result;
}

NextTokenEval eval_next_token(const LanguageModel& model,
                              std::span<const Document> eval_docs,
                              const NextTokenEvalOptions& options) {
  NextTokenEval eval;
  std::vector<const Document*> eligible;
  eligible.reserve(eval_docs.size());
  for (const Document& doc : eval_docs) {
    if (doc.tokens.size() < options.prompt_tokens) {
      ++eval.skipped_short;
      continue;
    }
    eligible.push_back(&doc);
  }
  if (eligible.empty()) {
    throw Error("no evaluation documents long enough for a " +
                std::to_string(options.prompt_tokens) + "-token prompt");
  }
  eval.gini_values.assign(eligible.size(), 0.0);
  eval.collapsed_flags.assign(eligible.size(), 0.0);
  parallel_for(eligible.size(), options.threads, [&](std::size_t i) {
    const std::span<const TokenId> prompt(eligible[i]->tokens.data(),
                                          options.prompt_tokens);
    const ProbVector q = model.top_n_distribution(prompt, options.top_n);
    eval.gini_values[i] = gini(q);
    eval.collapsed_flags[i] = collapsed(q, options.tau);
  });
  double gini_sum = 0.0;
  double collapsed_sum = 0.0;
  for (std::size_t i = 0; i < eligible.size(); ++i) {
    gini_sum += eval.gini_values[i];
    collapsed_sum += eval.collapsed_flags[i];
  }
  eval.mean_gini = gini_sum / static_cast<double>(eligible.size());
  eval.collapsed_pct =
      100.0 * collapsed_sum / static_cast<double>(eligible.size());
  return eval;
}

}  // namespace surplex
