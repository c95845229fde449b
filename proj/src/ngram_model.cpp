#include "surplex/ngram_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "surplex/errors.hpp"
#include "surplex/io.hpp"
#include "surplex/rng.hpp"

namespace surplex {
namespace {

constexpr std::uint32_t kNoSupport = std::numeric_limits<std::uint32_t>::max();

}  // namespace

void NgramConfig::validate() const {
  if (order < 1) throw ConfigError("n-gram order must be at least 1");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw ConfigError("smoothing alpha must be positive");
  }
  if (!(backoff_lambda > 0.0) || backoff_lambda > 1.0) {
    throw ConfigError("backoff lambda must be in (0, 1]");
  }
}

void SamplingConfig::validate() const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw ConfigError("sampling temperature must be positive");
  }
  if (top_k < 1) throw ConfigError("sampling top_k must be at least 1");
}

NgramModel::NgramModel(std::shared_ptr<const Vocabulary> vocab,
                       NgramConfig config)
    : vocab_(std::move(vocab)), config_(config) {
  if (!vocab_) throw ConfigError("n-gram model needs a vocabulary");
  config_.validate();
  if (vocab_->size() <= kNumReservedIds) {
    throw ConfigError("vocabulary has no regular tokens");
  }
  weights_.assign(config_.order, 0.0);
  if (config_.order == 1) {
    weights_[0] = 1.0;
  } else {
    // Highest order gets lambda, each shorter context lambda times the
    // remaining mass; the unigram takes the exact FP remainder so the
    // weights sum to 1.0 without rounding residue.
    double upper = 0.0;
    for (std::size_t level = config_.order; level >= 2; --level) {
      const double w = config_.backoff_lambda *
                       std::pow(1.0 - config_.backoff_lambda,
                                static_cast<double>(config_.order - level));
      weights_[level - 1] = w;
      upper += w;
    }
    weights_[0] = 1.0 - upper;
  }
  levels_.assign(config_.order, Table{});
  rebuild_support();
}

std::u32string NgramModel::pack_key(std::span<const TokenId> context) {
  std::u32string key;
  key.reserve(context.size());
  for (TokenId id : context) key.push_back(static_cast<char32_t>(id));
  return key;
}

std::vector<TokenId> NgramModel::padded_context(
    std::span<const TokenId> context) const {
  const std::size_t width = config_.order - 1;
  std::vector<TokenId> padded;
  padded.reserve(width);
  const std::size_t take = std::min(width, context.size());
  for (std::size_t i = 0; i < width - take; ++i) padded.push_back(kBosId);
  for (std::size_t i = context.size() - take; i < context.size(); ++i) {
    padded.push_back(context[i]);
  }
  return padded;
}

void NgramModel::rebuild_support() {
  support_.clear();
  const Table& unigrams = levels_[0];
  auto root = unigrams.find(std::u32string());
  auto counted = [&](TokenId id) {
    return root != unigrams.end() && root->second.by_token.count(id) > 0;
  };
  if (counted(kEosId)) support_.push_back(kEosId);
  if (counted(kUnkId)) support_.push_back(kUnkId);
  for (std::size_t id = kNumReservedIds; id < vocab_->size(); ++id) {
    support_.push_back(static_cast<TokenId>(id));
  }

  support_pos_.assign(vocab_->size(), kNoSupport);
  for (std::size_t i = 0; i < support_.size(); ++i) {
    support_pos_[support_[i]] = static_cast<std::uint32_t>(i);
  }

  const double total = root == unigrams.end() ? 0.0 : root->second.total;
  const double denom =
      total + config_.alpha * static_cast<double>(support_.size());
  unigram_probs_.assign(support_.size(), 0.0);
  for (std::size_t i = 0; i < support_.size(); ++i) {
    double count = 0.0;
    if (root != unigrams.end()) {
      auto it = root->second.by_token.find(support_[i]);
      if (it != root->second.by_token.end()) count = it->second;
    }
    unigram_probs_[i] = (count + config_.alpha) / denom;
  }
}

double NgramModel::token_prob(std::span<const TokenId> padded,
                              TokenId token) const {
  if (token >= support_pos_.size() || support_pos_[token] == kNoSupport) {
    throw Error("token outside model support: id " + std::to_string(token));
  }
  const double alpha_mass =
      config_.alpha * static_cast<double>(support_.size());
  double p = weights_[0] * unigram_probs_[support_pos_[token]];
  for (std::size_t level = 2; level <= config_.order; ++level) {
    const auto ctx = padded.subspan(padded.size() - (level - 1));
    const Table& table = levels_[level - 1];
    auto it = table.find(pack_key(ctx));
    double count = 0.0;
    double total = 0.0;
    if (it != table.end()) {
      total = it->second.total;
      auto tok = it->second.by_token.find(token);
      if (tok != it->second.by_token.end()) count = tok->second;
    }
    p += weights_[level - 1] * (count + config_.alpha) / (total + alpha_mass);
  }
  return p;
}

std::vector<double> NgramModel::support_distribution(
    std::span<const TokenId> padded) const {
  const std::size_t size = support_.size();
  const double alpha_mass = config_.alpha * static_cast<double>(size);
  std::vector<double> probs(size);

  // Unigram level plus each higher level's smoothing floor are dense; the
  // observed higher-order counts arrive as sparse additions.
  double floor = 0.0;
  struct LevelHit {
    const ContextCounts* counts;
    double scale;
  };
  std::vector<LevelHit> hits;
  for (std::size_t level = 2; level <= config_.order; ++level) {
    const auto ctx = padded.subspan(padded.size() - (level - 1));
    const Table& table = levels_[level - 1];
    auto it = table.find(pack_key(ctx));
    const double total = it == table.end() ? 0.0 : it->second.total;
    const double denom = total + alpha_mass;
    floor += weights_[level - 1] * config_.alpha / denom;
    if (it != table.end()) {
      hits.push_back({&it->second, weights_[level - 1] / denom});
    }
  }
  for (std::size_t i = 0; i < size; ++i) {
    probs[i] = weights_[0] * unigram_probs_[i] + floor;
  }
  for (const LevelHit& hit : hits) {
    for (const auto& [token, count] : hit.counts->by_token) {
      probs[support_pos_[token]] += hit.scale * count;
    }
  }
  return probs;
}

ProbVector NgramModel::next_token_distribution(
    std::span<const TokenId> context) const {
  const std::vector<TokenId> padded = padded_context(context);
  const std::vector<double> probs = support_distribution(padded);
  std::vector<ProbEntry> entries;
  entries.reserve(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    entries.push_back({support_[i], probs[i]});
  }
  return ProbVector::full_vocab(std::move(entries));
}

std::vector<std::pair<TokenId, double>> NgramModel::top_candidates(
    std::span<const TokenId> padded, std::size_t n) const {
  const std::vector<double> probs = support_distribution(padded);
  std::vector<std::uint32_t> index(probs.size());
  std::iota(index.begin(), index.end(), 0u);
  const std::size_t take = std::min(n, index.size());
  // support_ is ascending, so comparing indices breaks ties by token id.
  std::partial_sort(index.begin(), index.begin() + take, index.end(),
                    [&](std::uint32_t a, std::uint32_t b) {
                      if (probs[a] != probs[b]) return probs[a] > probs[b];
                      return a < b;
                    });
  std::vector<std::pair<TokenId, double>> top;
  top.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    top.push_back({support_[index[i]], probs[index[i]]});
  }
  return top;
}

ProbVector NgramModel::top_n_distribution(std::span<const TokenId> context,
                                          std::size_t n) const {
  if (n < 1) throw ConfigError("top-n cutoff must be at least 1");
  const std::vector<TokenId> padded = padded_context(context);
  std::vector<ProbEntry> entries;
  for (const auto& [token, prob] : top_candidates(padded, n)) {
    entries.push_back({token, prob});
  }
  return ProbVector::top_n(std::move(entries), n);
}

double NgramModel::sequence_logprob(std::span<const TokenId> tokens,
                                    std::span<const TokenId> context) const {
  if (tokens.empty()) return 0.0;  // empty sum: log P of nothing is 0
  std::vector<TokenId> running(context.begin(), context.end());
  double logprob = 0.0;
  for (TokenId token : tokens) {
    const std::vector<TokenId> padded = padded_context(running);
    logprob += std::log(token_prob(padded, token));
    running.push_back(token);
  }
  return logprob;
}

std::vector<TokenId> NgramModel::generate_continuation(
    std::span<const TokenId> prompt, std::size_t max_new_tokens,
    const SamplingConfig& sampling) const {
  sampling.validate();
  std::vector<TokenId> out;
  out.reserve(max_new_tokens);
  std::vector<TokenId> window = padded_context(prompt);
  Rng rng(sampling.seed);

  for (std::size_t step = 0; step < max_new_tokens; ++step) {
    TokenId chosen;
    if (sampling.greedy) {
      chosen = top_candidates(window, 1).front().first;
    } else {
      const auto candidates = top_candidates(window, sampling.top_k);
      // Temperature applies to the already-truncated candidate set. The
      // max-logit shift keeps exp() in range at small temperatures.
      const double log_max = std::log(candidates.front().second);
      double total = 0.0;
      std::vector<double> weights(candidates.size());
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        weights[i] = std::exp((std::log(candidates[i].second) - log_max) /
                              sampling.temperature);
        total += weights[i];
      }
      const double r = rng.next_double() * total;
      std::size_t pick = candidates.size() - 1;
      double cumulative = 0.0;
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        cumulative += weights[i];
        if (r < cumulative) {
          pick = i;
          break;
        }
      }
      chosen = candidates[pick].first;
    }
    if (chosen == kEosId && sampling.stop_at_eos) break;
    out.push_back(chosen);
    if (!window.empty()) {
      window.erase(window.begin());
      window.push_back(chosen);
    }
  }
  return out;
}

void NgramModel::fine_tune(std::span<const Document> documents,
                           double weight) {
  if (documents.empty()) {
    throw ConfigError("fine_tune requires at least one document");
  }
  if (!(weight > 0.0) || !std::isfinite(weight)) {
    throw ConfigError("fine-tune weight must be positive");
  }
  for (const Document& doc : documents) {
    if (doc.tokens.empty()) {
      throw Error("document '" + doc.id + "' has no tokens");
    }
    for (TokenId id : doc.tokens) {
      if (id == kBosId || id >= vocab_->size()) {
        throw Error("document '" + doc.id + "' contains invalid token id " +
                    std::to_string(id));
      }
    }
    std::vector<TokenId> stream;
    stream.reserve(config_.order - 1 + doc.tokens.size() + 1);
    stream.insert(stream.end(), config_.order - 1, kBosId);
    stream.insert(stream.end(), doc.tokens.begin(), doc.tokens.end());
    stream.push_back(kEosId);
    for (std::size_t t = config_.order - 1; t < stream.size(); ++t) {
      const TokenId target = stream[t];
      for (std::size_t level = 1; level <= config_.order; ++level) {
        const std::span<const TokenId> ctx(&stream[t - (level - 1)],
                                           level - 1);
        ContextCounts& entry = levels_[level - 1][pack_key(ctx)];
        entry.total += weight;
        entry.by_token[target] += weight;
      }
    }
  }
  rebuild_support();
}

std::unique_ptr<LanguageModel> NgramModel::clone() const {
  return std::unique_ptr<LanguageModel>(new NgramModel(*this));
}

double NgramModel::level_count(std::size_t level,
                               std::span<const TokenId> context,
                               TokenId token) const {
  if (level < 1 || level > config_.order) {
    throw Error("level out of range: " + std::to_string(level));
  }
  if (context.size() != level - 1) {
    throw Error("level " + std::to_string(level) + " context must have " +
                std::to_string(level - 1) + " ids");
  }
  const Table& table = levels_[level - 1];
  auto it = table.find(pack_key(context));
  if (it == table.end()) return 0.0;
  auto tok = it->second.by_token.find(token);
  return tok == it->second.by_token.end() ? 0.0 : tok->second;
}

double NgramModel::level_total(std::size_t level,
                               std::span<const TokenId> context) const {
  if (level < 1 || level > config_.order) {
    throw Error("level out of range: " + std::to_string(level));
  }
  if (context.size() != level - 1) {
    throw Error("level " + std::to_string(level) + " context must have " +
                std::to_string(level - 1) + " ids");
  }
  const Table& table = levels_[level - 1];
  auto it = table.find(pack_key(context));
  return it == table.end() ? 0.0 : it->second.total;
}

double NgramModel::level_weight(std::size_t level) const {
  if (level < 1 || level > config_.order) {
    throw Error("level out of range: " + std::to_string(level));
  }
  return weights_[level - 1];
}

void NgramModel::save_snapshot(const std::string& path) const {
  nlohmann::json root;
  root["format"] = "surplex-ngram";
  root["version"] = 1;
  root["order"] = config_.order;
  root["alpha"] = config_.alpha;
  root["backoff_lambda"] = config_.backoff_lambda;

  nlohmann::json vocab_rows = nlohmann::json::array();
  for (std::size_t id = 0; id < vocab_->size(); ++id) {
    vocab_rows.push_back({vocab_->surface_of(static_cast<TokenId>(id)),
                          vocab_->count_of(static_cast<TokenId>(id))});
  }
  root["vocab"] = std::move(vocab_rows);

  nlohmann::json levels = nlohmann::json::array();
  for (const Table& table : levels_) {
    std::vector<const std::u32string*> keys;
    keys.reserve(table.size());
    for (const auto& [key, counts] : table) keys.push_back(&key);
    std::sort(keys.begin(), keys.end(),
              [](const std::u32string* a, const std::u32string* b) {
                return *a < *b;
              });
    nlohmann::json contexts = nlohmann::json::array();
    for (const std::u32string* key : keys) {
      const ContextCounts& counts = table.at(*key);
      nlohmann::json ctx_ids = nlohmann::json::array();
      for (char32_t id : *key) ctx_ids.push_back(static_cast<TokenId>(id));
      std::vector<std::pair<TokenId, double>> rows(counts.by_token.begin(),
                                                   counts.by_token.end());
      std::sort(rows.begin(), rows.end());
      nlohmann::json row_json = nlohmann::json::array();
      for (const auto& [token, count] : rows) {
        row_json.push_back({token, count});
      }
      contexts.push_back({std::move(ctx_ids), std::move(row_json)});
    }
    levels.push_back(std::move(contexts));
  }
  root["levels"] = std::move(levels);
  write_file(path, root.dump());
}

NgramModel NgramModel::load_snapshot(const std::string& path) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad model snapshot " + path + ": " + e.what());
  }
  try {
    if (root.value("format", "") != "surplex-ngram") {
      throw IoError("bad model snapshot " + path + ": unknown format");
    }
    if (root.value("version", 0) != 1) {
      throw IoError("bad model snapshot " + path + ": unsupported version");
    }
    std::vector<std::pair<std::string, std::uint64_t>> vocab_rows;
    for (const auto& row : root.at("vocab")) {
      vocab_rows.emplace_back(row.at(0).get<std::string>(),
                              row.at(1).get<std::uint64_t>());
    }
    auto vocab = std::make_shared<const Vocabulary>(
        Vocabulary::from_entries(std::move(vocab_rows)));

    NgramConfig config;
    config.order = root.at("order").get<std::size_t>();
    config.alpha = root.at("alpha").get<double>();
    config.backoff_lambda = root.at("backoff_lambda").get<double>();
    NgramModel model(std::move(vocab), config);

    const auto& levels = root.at("levels");
    if (levels.size() != config.order) {
      throw IoError("bad model snapshot " + path + ": level count mismatch");
    }
    for (std::size_t l = 0; l < levels.size(); ++l) {
      for (const auto& ctx_row : levels[l]) {
        std::u32string key;
        for (const auto& id : ctx_row.at(0)) {
          key.push_back(static_cast<char32_t>(id.get<TokenId>()));
        }
        if (key.size() != l) {
          throw IoError("bad model snapshot " + path + ": context length");
        }
        ContextCounts& counts = model.levels_[l][key];
        for (const auto& tok_row : ctx_row.at(1)) {
          const TokenId token = tok_row.at(0).get<TokenId>();
          const double count = tok_row.at(1).get<double>();
          if (!(count >= 0.0)) {
            throw IoError("bad model snapshot " + path + ": negative count");
          }
          counts.by_token[token] += count;
          counts.total += count;
        }
      }
    }
    model.rebuild_support();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad model snapshot " + path + ": " + e.what());
  }
}

}  // namespace surplex
