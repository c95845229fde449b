#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "surplex/corpus.hpp"
#include "surplex/metrics.hpp"
#include "surplex/model.hpp"
#include "surplex/selection.hpp"

namespace surplex {

struct EvalConfig {
  std::size_t n_eval_docs = 1000;  // held-out human documents
  std::size_t prompt_tokens = 32;
  std::size_t top_n = 100;
  double tau = 0.99;
};

struct SimConfig {
  std::size_t prompt_len = 64;     // k: human prefix kept in every prompt
  std::size_t max_doc_len = 128;   // L: prompt plus continuation budget
  std::size_t steps = 10;          // T: fine-tuning iterations
  std::size_t select_size = 1000;  // z: training-set size per step
  std::size_t n_prompts = 1000;
  Strategy strategy;               // AiOnly unless configured otherwise
  SamplingConfig sampling;
  // Counting analogue of the fine-tuning learning rate: how hard each
  // step's training set presses on the accumulated counts. At 1.0 the
  // pretraining counts dominate for many steps and the loop barely moves.
  double fine_tune_weight = 25.0;
  EvalConfig eval;
  std::uint64_t master_seed = 1;
  std::size_t repeats = 3;
  bool accumulate_pool = false;       // keep every past generation selectable
  bool score_against_initial = false; // rank surplexity under the step-0 model
  bool pretrain_on_human = true;      // absorb the training pool before step 0
  std::size_t threads = 4;

  void validate() const;  // throws ConfigError on bad combinations
};

// Documents generated at one step: d_i = prompt_i ++ continuation_i.
struct GenerationSet {
  int step = 0;
  std::vector<Document> documents;
};

// One repeat's raw results: named per-step value series (entropy, gini,
// collapsed_pct, surplexity, optional ci_accuracy, plus their _delta
// counterparts), per-step selection reports, and wall-clock timings.
struct RepeatRecord {
  std::size_t repeat = 0;
  std::vector<std::pair<std::string, std::vector<double>>> series;
  std::vector<SelectionReport> selections;  // index j-1 holds step j
  std::vector<double> step_seconds;         // index = step, 0..T
  std::vector<std::string> snapshot_paths;
};

struct RunRecord {
  SimConfig config;
  std::string run_label;  // defaults to the strategy name
  std::vector<std::string> corpus_paths;
  std::vector<std::string> corpus_labels;
  std::string ci_path;  // empty when no CI items were scored
  std::vector<RepeatRecord> repeats;
  bool failed = false;
  std::string failure_message;
};

// Train/eval split plus the fixed prompt set. The eval holdout is carved
// first — the last n_eval_docs documents (in pool order) long enough for an
// evaluation prompt — and prompts come from the first n_prompts eligible
// training documents.
struct RunInputs {
  std::vector<Document> train_docs;
  std::vector<Document> eval_docs;
  PromptSet prompts;
};

RunInputs prepare_run_inputs(const SimConfig& config,
                             std::span<const Corpus> corpora);

struct RunCallbacks {
  // Receives one human-readable line per completed step.
  std::function<void(const std::string&)> info;
};

// Runs the full self-consumption experiment: per repeat, clone the base
// model, optionally absorb the human training pool (that trained clone is
// the step-0 model), generate a baseline set, then iterate
// generate -> select -> fine-tune -> evaluate for `steps` rounds.
//
// Shortages of prompts or eval documents fail before any work. A mid-run
// model failure stops the run and returns the partial record with the
// failure marker set, so callers can persist what exists.
RunRecord run_autophagy(const SimConfig& config,
                        std::span<const Corpus> corpora,
                        std::span<const CiItem> ci_items,
                        const LanguageModel& base_model,
                        const std::string& snapshot_dir = "",
                        const RunCallbacks& callbacks = {});

// Canonical metric order for a record (series order of the first repeat).
std::vector<std::string> metric_names(const RunRecord& record);

// Per-step aggregate of one metric across repeats. Step j's sample holds
// one value per repeat.
std::vector<MetricSample> aggregate_metric(const RunRecord& record,
                                           const std::string& name);

struct PersistedPaths {
  std::string config_path;
  std::string metrics_path;
  std::string selection_path;
};

// Writes config.json, metrics.csv (repeat,step,metric,value) and
// selection.csv (repeat,step,source_label,origin,count) into dir. Output
// bytes depend only on the record contents, never on wall-clock state.
PersistedPaths persist_run(const RunRecord& record, const std::string& dir);

// Rebuilds a RunRecord (config, series, selection breakdowns) from a
// persisted run directory.
RunRecord load_run(const std::string& dir);

// Aligned cross-run view used by the report writer.
struct ComparisonSeries {
  std::string label;
  std::vector<MetricSample> per_step;
};

struct ComparisonTable {
  std::size_t steps = 0;  // points per series: baseline plus T steps
  std::vector<std::pair<std::string, std::vector<ComparisonSeries>>> metrics;
};

// Aligns records that share (k, L, T); differing fields are a hard error
// naming the offender.
ComparisonTable compare_runs(std::span<const RunRecord> records);

}  // namespace surplex
