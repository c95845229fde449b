#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "surplex/corpus.hpp"
#include "surplex/model.hpp"

namespace surplex {

// How the per-step fine-tuning set is composed.
struct Strategy {
  enum class Kind {
    AiOnly,         // everything generated at the current step
    HumanOnly,      // seeded sample of z human documents
    Mixed,          // z documents, human_fraction of them human
    RandomHuman,    // alias of HumanOnly with an explicit sampling name
    RandomAi,       // seeded sample of z generated documents
    TopEntropy,     // z highest linguistic entropy, origin ignored
    TopSurplexity,  // z most surprising under the scoring model
  };

  Kind kind = Kind::AiOnly;
  double human_fraction = 0.5;  // Mixed only, in [0, 1]

  void validate() const;
  std::string name() const;  // "ai-only", "top-surplexity", ...
  static Strategy parse(std::string_view name, double human_fraction = 0.5);
  bool needs_model() const {
    return kind == Kind::TopSurplexity;
  }
};

// Provenance breakdown of one selection round.
struct SelectionReport {
  std::map<std::string, std::size_t> by_source;  // source_label -> count
  std::map<std::string, std::size_t> by_origin;  // "human"/"ai:<j>" -> count
  // Joint (source_label, origin label) counts; the two maps above are its
  // marginals. This is what selection.csv rows and stacked charts carry.
  std::map<std::pair<std::string, std::string>, std::size_t> by_source_origin;
  std::size_t selected = 0;
  bool shortfall = false;  // fewer than z eligible; everything was taken
  // Rank-boundary scores, present for TopEntropy/TopSurplexity.
  std::optional<double> min_selected_score;
  std::optional<double> max_unselected_score;
};

struct SelectionOptions {
  std::size_t z = 1000;
  std::uint64_t seed = 0;
  // Scoring model for TopSurplexity; by contract the model about to be
  // fine-tuned, unless the caller deliberately scores against the initial
  // model for ablation.
  const LanguageModel* model = nullptr;
  std::size_t threads = 1;
};

// Composes the training set from the pool per the strategy. Ties in ranked
// strategies break by ascending document id; sampling is seeded and
// reproducible. Fewer than z eligible documents selects all of them with
// the shortfall flag raised; zero eligible is a hard error.
std::pair<std::vector<Document>, SelectionReport> select_training_set(
    std::span<const Document> pool, const Strategy& strategy,
    const SelectionOptions& options);

}  // namespace surplex
