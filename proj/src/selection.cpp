#include "surplex/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "surplex/errors.hpp"
#include "surplex/metrics.hpp"
#include "surplex/parallel.hpp"
#include "surplex/rng.hpp"

namespace surplex {
namespace {

// Seeded partial Fisher-Yates draw of `take` distinct indices out of pool
// positions listed in `candidates`; result comes back in pool order.
std::vector<std::size_t> sample_indices(std::vector<std::size_t> candidates,
                                        std::size_t take, Rng& rng) {
  for (std::size_t i = 0; i < take && i < candidates.size(); ++i) {
    const std::size_t j =
        i + static_cast<std::size_t>(rng.next_below(candidates.size() - i));
    std::swap(candidates[i], candidates[j]);
  }
  candidates.resize(std::min(take, candidates.size()));
  std::sort(candidates.begin(), candidates.end());
  return candidates;
}

std::vector<std::size_t> positions_where(
    std::span<const Document> pool, bool (*pred)(const Document&)) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pred(pool[i])) out.push_back(i);
  }
  return out;
}

bool is_human_doc(const Document& d) { return d.origin.is_human(); }
bool is_ai_doc(const Document& d) { return d.origin.is_ai(); }

}  // namespace

void Strategy::validate() const {
  if (kind == Kind::Mixed &&
      !(human_fraction >= 0.0 && human_fraction <= 1.0)) {
    throw ConfigError("mixed human fraction must be in [0, 1]");
  }
}

std::string Strategy::name() const {
  switch (kind) {
    case Kind::AiOnly: return "ai-only";
    case Kind::HumanOnly: return "human-only";
    case Kind::Mixed: return "mixed";
    case Kind::RandomHuman: return "random-human";
    case Kind::RandomAi: return "random-ai";
    case Kind::TopEntropy: return "top-entropy";
    case Kind::TopSurplexity: return "top-surplexity";
  }
  return "unknown";
}

Strategy Strategy::parse(std::string_view name, double human_fraction) {
  Strategy strategy;
  strategy.human_fraction = human_fraction;
  if (name == "ai-only") {
    strategy.kind = Kind::AiOnly;
  } else if (name == "human-only") {
    strategy.kind = Kind::HumanOnly;
  } else if (name == "mixed") {
    strategy.kind = Kind::Mixed;
  } else if (name == "random-human") {
    strategy.kind = Kind::RandomHuman;
  } else if (name == "random-ai") {
    strategy.kind = Kind::RandomAi;
  } else if (name == "top-entropy") {
    strategy.kind = Kind::TopEntropy;
  } else if (name == "top-surplexity") {
    strategy.kind = Kind::TopSurplexity;
  } else {
    throw ConfigError(
        "unknown strategy '" + std::string(name) +
        "' (expected ai-only, human-only, mixed, random-human, random-ai, "
        "top-entropy, or top-surplexity)");
  }
  strategy.validate();
  return strategy;
}

std::pair<std::vector<Document>, SelectionReport> select_training_set(
    std::span<const Document> pool, const Strategy& strategy,
    const SelectionOptions& options) {
  if (pool.empty()) throw Error("selection pool is empty");
  if (options.z < 1) throw ConfigError("selection size z must be at least 1");
  strategy.validate();
  if (strategy.needs_model() && options.model == nullptr) {
    throw ConfigError("strategy " + strategy.name() +
                      " needs a scoring model");
  }

  std::vector<std::size_t> chosen;  // pool positions
  SelectionReport report;

  switch (strategy.kind) {
    case Strategy::Kind::AiOnly: {
      // The current generation: documents tagged with the highest step
      // present in the pool.
      int current = -1;
      for (const Document& d : pool) {
        if (d.origin.is_ai()) current = std::max(current, d.origin.step);
      }
      if (current < 0) {
        throw Error("ai-only selection: pool has no generated documents");
      }
      for (std::size_t i = 0; i < pool.size(); ++i) {
        if (pool[i].origin.is_ai() && pool[i].origin.step == current) {
          chosen.push_back(i);
        }
      }
      break;
    }
    case Strategy::Kind::HumanOnly:
    case Strategy::Kind::RandomHuman: {
      auto humans = positions_where(pool, is_human_doc);
      if (humans.empty()) {
        throw Error(strategy.name() + " selection: pool has no human documents");
      }
      report.shortfall = humans.size() < options.z;
      Rng rng(derive_seed(options.seed, {0}));
      chosen = sample_indices(std::move(humans), options.z, rng);
      break;
    }
    case Strategy::Kind::RandomAi: {
      auto ai = positions_where(pool, is_ai_doc);
      if (ai.empty()) {
        throw Error("random-ai selection: pool has no generated documents");
      }
      report.shortfall = ai.size() < options.z;
      Rng rng(derive_seed(options.seed, {1}));
      chosen = sample_indices(std::move(ai), options.z, rng);
      break;
    }
    case Strategy::Kind::Mixed: {
      // Round-half-up on the human share; the generated share is the rest.
      const std::size_t want_human = static_cast<std::size_t>(std::floor(
          strategy.human_fraction * static_cast<double>(options.z) + 0.5));
      const std::size_t want_ai = options.z - want_human;
      auto humans = positions_where(pool, is_human_doc);
      auto ai = positions_where(pool, is_ai_doc);
      report.shortfall = humans.size() < want_human || ai.size() < want_ai;
      Rng human_rng(derive_seed(options.seed, {0}));
      Rng ai_rng(derive_seed(options.seed, {1}));
      chosen = sample_indices(std::move(humans), want_human, human_rng);
      auto ai_chosen = sample_indices(std::move(ai), want_ai, ai_rng);
      chosen.insert(chosen.end(), ai_chosen.begin(), ai_chosen.end());
      std::sort(chosen.begin(), chosen.end());
      if (chosen.empty()) {
        throw Error("mixed selection: no eligible documents");
      }
      break;
    }
    case Strategy::Kind::TopEntropy:
    case Strategy::Kind::TopSurplexity: {
      std::vector<double> scores(pool.size());
      if (strategy.kind == Strategy::Kind::TopEntropy) {
        parallel_for(pool.size(), options.threads, [&](std::size_t i) {
          scores[i] = linguistic_entropy(pool[i]);
        });
      } else {
        const LanguageModel* model = options.model;
        parallel_for(pool.size(), options.threads, [&](std::size_t i) {
          scores[i] = surplexity(*model, pool[i]);
        });
      }
      std::vector<std::size_t> order(pool.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::sort(order.begin(), order.end(),
                [&](std::size_t a, std::size_t b) {
                  if (scores[a] != scores[b]) return scores[a] > scores[b];
                  return pool[a].id < pool[b].id;
                });
      const std::size_t take = std::min(options.z, order.size());
      report.shortfall = order.size() < options.z;
      chosen.assign(order.begin(), order.begin() + take);
      report.min_selected_score = scores[chosen.back()];
      if (take < order.size()) {
        report.max_unselected_score = scores[order[take]];
      }
      break;
    }
  }

  std::vector<Document> selected;
  selected.reserve(chosen.size());
  for (std::size_t i : chosen) {
    const Document& doc = pool[i];
    selected.push_back(doc);
    report.by_source[doc.source_label] += 1;
    report.by_origin[doc.origin.label()] += 1;
    report.by_source_origin[{doc.source_label, doc.origin.label()}] += 1;
  }
  report.selected = selected.size();
  return {std::move(selected), std::move(report)};
}

}  // namespace surplex
