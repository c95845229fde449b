#include <algorithm>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "surplex/corpus.hpp"
#include "surplex/errors.hpp"
#include "surplex/io.hpp"
#include "surplex/metrics.hpp"
#include "surplex/ngram_model.hpp"
#include "surplex/remote_model.hpp"
#include "surplex/report.hpp"
#include "surplex/simulator.hpp"
#include "surplex/tokenizer.hpp"

namespace {

using surplex::Document;
using surplex::NgramModel;
using surplex::Vocabulary;

// "label=path" or bare path (label = filename stem).
std::pair<std::string, std::string> parse_corpus_spec(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq != std::string::npos && eq > 0 && eq + 1 < spec.size()) {
    return {spec.substr(0, eq), spec.substr(eq + 1)};
  }
  std::string stem = std::filesystem::path(spec).stem().string();
  if (stem.empty()) stem = "corpus";
  return {stem, spec};
}

std::shared_ptr<const Vocabulary> build_vocab(
    const std::vector<std::pair<std::string, std::string>>& specs,
    std::size_t min_count) {
  std::vector<std::string> texts;
  for (const auto& [label, path] : specs) {
    for (surplex::RawDoc& raw : surplex::read_corpus_file(path)) {
      texts.push_back(std::move(raw.text));
    }
  }
  return std::make_shared<Vocabulary>(Vocabulary::build(texts, min_count));
}

std::vector<surplex::Corpus> load_corpora(
    const std::vector<std::pair<std::string, std::string>>& specs,
    const Vocabulary& vocab) {
  std::vector<surplex::Corpus> corpora;
  corpora.reserve(specs.size());
  for (const auto& [label, path] : specs) {
    corpora.push_back(surplex::load_corpus(path, label, vocab));
  }
  return corpora;
}

struct SimulateOpts {
  std::vector<std::string> corpus_specs;
  std::string out_dir = "surplex_run";
  std::string ci_path;
  std::string snapshot_path;
  std::string remote_url;
  std::string remote_auth_env = "SURPLEX_API_TOKEN";
  std::string label;
  std::string strategy_name = "ai-only";
  double human_fraction = 0.5;
  std::size_t min_count = 1;
  bool save_snapshots = false;
  surplex::NgramConfig ngram;
  surplex::SimConfig config;
};

int run_simulate(SimulateOpts& opts) {
  opts.config.strategy =
      surplex::Strategy::parse(opts.strategy_name, opts.human_fraction);
  opts.config.validate();  // reject bad numbers before touching the disk
  opts.ngram.validate();
  if (!opts.snapshot_path.empty() && !opts.remote_url.empty()) {
    throw surplex::ConfigError(
        "choose either --model-snapshot or --remote-url, not both");
  }

  std::vector<std::pair<std::string, std::string>> specs;
  specs.reserve(opts.corpus_specs.size());
  for (const std::string& spec : opts.corpus_specs) {
    specs.push_back(parse_corpus_spec(spec));
  }

  std::shared_ptr<const Vocabulary> vocab;
  std::unique_ptr<surplex::LanguageModel> model;
  if (!opts.snapshot_path.empty()) {
    auto loaded = std::make_unique<NgramModel>(
        NgramModel::load_snapshot(opts.snapshot_path));
    vocab = loaded->vocab_ptr();
    model = std::move(loaded);
  } else {
    vocab = build_vocab(specs, opts.min_count);
    if (!opts.remote_url.empty()) {
      surplex::RemoteConfig remote;
      remote.base_url = opts.remote_url;
      remote.auth_env_var = opts.remote_auth_env;
      model = std::make_unique<surplex::RemoteModel>(vocab, remote);
    } else {
      model = std::make_unique<NgramModel>(vocab, opts.ngram);
    }
  }

  const std::vector<surplex::Corpus> corpora = load_corpora(specs, *vocab);
  std::vector<surplex::CiItem> ci_items;
  if (!opts.ci_path.empty()) {
    ci_items = surplex::load_ci_items(opts.ci_path, *vocab);
  }

  const std::string snapshot_dir =
      opts.save_snapshots ? opts.out_dir + "/snapshots" : "";
  surplex::RunCallbacks callbacks;
  callbacks.info = [](const std::string& line) {
    std::cout << line << "\n";
  };

  surplex::RunRecord record = surplex::run_autophagy(
      opts.config, corpora, ci_items, *model, snapshot_dir, callbacks);
  for (const auto& [label, path] : specs) {
    record.corpus_labels.push_back(label);
    record.corpus_paths.push_back(path);
  }
  record.ci_path = opts.ci_path;
  if (!opts.label.empty()) record.run_label = opts.label;

  const surplex::PersistedPaths paths =
      surplex::persist_run(record, opts.out_dir);
  std::cout << "wrote " << paths.config_path << "\n"
            << "wrote " << paths.metrics_path << "\n"
            << "wrote " << paths.selection_path << "\n";
  if (record.failed) {
    std::cerr << "error: run failed: " << record.failure_message << "\n";
    return 1;
  }
  return 0;
}

struct MetricsOpts {
  std::string input;
  std::string metric = "entropy";
  std::string snapshot_path;
  std::string out_path;
  std::size_t prompt_tokens = 32;
  std::size_t top_n = 100;
  double tau = 0.99;
  std::size_t min_count = 1;
};

void emit_table(const std::vector<std::pair<std::string, double>>& rows,
                const surplex::MetricSample& sample,
                const std::string& out_path) {
  const bool csv = !out_path.empty();
  const char sep = csv ? ',' : '\t';
  std::string text = std::string("id") + sep + "value\n";
  for (const auto& [id, value] : rows) {
    text += id;
    text += sep;
    text += surplex::format_double(value);
    text += '\n';
  }
  text += std::string("mean") + sep + surplex::format_double(sample.mean) +
          '\n';
  text += std::string("std_error") + sep +
          surplex::format_double(sample.std_error) + '\n';
  if (csv) {
    surplex::write_file(out_path, text);
    std::cout << "wrote " << out_path << "\n";
  } else {
    std::cout << text;
  }
}

int run_metrics(const MetricsOpts& opts) {
  const bool needs_model = opts.metric != "entropy";
  if (needs_model && opts.snapshot_path.empty()) {
    throw surplex::ConfigError("metric '" + opts.metric +
                               "' needs --snapshot <model file>");
  }
  std::unique_ptr<NgramModel> model;
  std::shared_ptr<const Vocabulary> vocab;
  if (!opts.snapshot_path.empty()) {
    model = std::make_unique<NgramModel>(
        NgramModel::load_snapshot(opts.snapshot_path));
    vocab = model->vocab_ptr();
  }

  std::vector<std::pair<std::string, double>> rows;
  if (opts.metric == "ci") {
    std::size_t skipped = 0;
    const std::vector<surplex::CiItem> items =
        surplex::load_ci_items(opts.input, *vocab, &skipped);
    if (skipped > 0) {
      std::cerr << "warning: skipped " << skipped << " malformed items\n";
    }
    const surplex::CiResult result = surplex::ci_accuracy(*model, items);
    for (std::size_t i = 0; i < result.item_correct.size(); ++i) {
      rows.emplace_back("item:" + std::to_string(i), result.item_correct[i]);
    }
    std::cerr << "ties broken toward lowest index: " << result.tie_count
              << "\n";
  } else {
    const auto [label, path] = parse_corpus_spec(opts.input);
    if (!vocab) vocab = build_vocab({{label, path}}, opts.min_count);
    const surplex::Corpus corpus = surplex::load_corpus(path, label, *vocab);
    std::size_t skipped_short = 0;
    for (const Document& doc : corpus.documents) {
      if (opts.metric == "entropy") {
        rows.emplace_back(doc.id, surplex::linguistic_entropy(doc));
      } else if (opts.metric == "surplexity") {
        rows.emplace_back(doc.id, surplex::surplexity(*model, doc));
      } else if (opts.metric == "gini" || opts.metric == "collapsed") {
        if (doc.tokens.size() < opts.prompt_tokens) {
          ++skipped_short;
          continue;
        }
        const std::span<const surplex::TokenId> prompt(
            doc.tokens.data(), opts.prompt_tokens);
        const surplex::ProbVector dist =
            model->top_n_distribution(prompt, opts.top_n);
        const double value = opts.metric == "gini"
                                 ? surplex::gini(dist)
                                 : surplex::collapsed(dist, opts.tau);
        rows.emplace_back(doc.id, value);
      } else {
        throw surplex::ConfigError(
            "unknown metric '" + opts.metric +
            "' (expected entropy, surplexity, gini, collapsed, or ci)");
      }
    }
    if (skipped_short > 0) {
      std::cerr << "warning: skipped " << skipped_short
                << " documents shorter than " << opts.prompt_tokens
                << " tokens\n";
    }
  }
  if (rows.empty()) throw surplex::Error("no documents produced a value");

  std::vector<double> values;
  values.reserve(rows.size());
  for (const auto& [id, value] : rows) values.push_back(value);
  emit_table(rows, surplex::MetricSample::from_values(opts.metric, values),
             opts.out_path);
  return 0;
}

struct FilterOpts {
  std::string input;
  std::string by = "surplexity";
  std::string snapshot_path;
  std::string out_path = "filtered.jsonl";
  std::string scores_path;
  std::size_t z = 1000;
  std::size_t min_count = 1;
};

int run_filter(const FilterOpts& opts) {
  if (opts.by != "surplexity" && opts.by != "entropy") {
    throw surplex::ConfigError("--by must be surplexity or entropy, got '" +
                               opts.by + "'");
  }
  if (opts.z < 1) throw surplex::ConfigError("z must be at least 1");
  if (opts.by == "surplexity" && opts.snapshot_path.empty()) {
    throw surplex::ConfigError(
        "filtering by surplexity needs --snapshot <model file>");
  }

  std::unique_ptr<NgramModel> model;
  std::shared_ptr<const Vocabulary> vocab;
  if (!opts.snapshot_path.empty()) {
    model = std::make_unique<NgramModel>(
        NgramModel::load_snapshot(opts.snapshot_path));
    vocab = model->vocab_ptr();
  }
  const auto [label, path] = parse_corpus_spec(opts.input);
  std::size_t skipped = 0;
  const std::vector<surplex::RawDoc> raw =
      surplex::read_corpus_file(path, &skipped);
  if (raw.empty()) throw surplex::IoError("empty corpus: " + path);
  if (!vocab) {
    std::vector<std::string> texts;
    texts.reserve(raw.size());
    for (const surplex::RawDoc& doc : raw) texts.push_back(doc.text);
    vocab =
        std::make_shared<Vocabulary>(Vocabulary::build(texts, opts.min_count));
  }

  struct Scored {
    std::size_t index;
    double score;
  };
  std::vector<Scored> scored;
  scored.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const std::vector<surplex::TokenId> tokens =
        surplex::tokenize(raw[i].text, *vocab);
    if (tokens.empty()) {
      ++skipped;
      continue;
    }
    const double score = opts.by == "entropy"
                             ? surplex::linguistic_entropy(tokens)
                             : surplex::surplexity(*model, tokens);
    scored.push_back({i, score});
  }
  if (skipped > 0) {
    std::cerr << "warning: skipped " << skipped << " unusable lines\n";
  }
  if (scored.empty()) throw surplex::Error("no scorable documents in " + path);

  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.index < b.index;
  });
  std::size_t take = opts.z;
  if (take > scored.size()) {
    std::cerr << "warning: requested " << opts.z << " documents but only "
              << scored.size() << " are available; writing all\n";
    take = scored.size();
  }

  std::string jsonl;
  std::string scores_csv = "id,score,rank\n";
  for (std::size_t rank = 0; rank < take; ++rank) {
    const Scored& entry = scored[rank];
    nlohmann::json line;
    line["text"] = raw[entry.index].text;
    if (!raw[entry.index].source.empty()) {
      line["source"] = raw[entry.index].source;
    }
    jsonl += line.dump();
    jsonl += '\n';
    scores_csv += label + ":" + std::to_string(entry.index) + "," +
                  surplex::format_double(entry.score) + "," +
                  std::to_string(rank + 1) + "\n";
  }
  surplex::write_file(opts.out_path, jsonl);
  const std::string scores_path = opts.scores_path.empty()
                                      ? opts.out_path + ".scores.csv"
                                      : opts.scores_path;
  surplex::write_file(scores_path, scores_csv);
  std::cout << "wrote " << opts.out_path << " (" << take << " documents)\n"
            << "wrote " << scores_path << "\n";
  return 0;
}

struct ReportOpts {
  std::vector<std::string> run_dirs;
  std::string out_dir = "report";
};

int run_report(const ReportOpts& opts) {
  std::vector<surplex::RunRecord> records;
  for (const std::string& dir : opts.run_dirs) {
    try {
      records.push_back(surplex::load_run(dir));
    } catch (const std::exception& e) {
      std::cerr << "warning: skipping " << dir << ": " << e.what() << "\n";
    }
  }
  if (records.empty()) {
    std::cerr << "error: no readable run directories\n";
    return 1;
  }
  for (const std::string& path :
       surplex::write_report(records, opts.out_dir)) {
    std::cout << "wrote " << path << "\n";
  }
  return 0;
}

struct TrainOpts {
  std::vector<std::string> corpus_specs;
  std::string out_path = "model.json";
  double weight = 1.0;
  std::size_t min_count = 1;
  surplex::NgramConfig ngram;
};

int run_train(const TrainOpts& opts) {
  opts.ngram.validate();
  std::vector<std::pair<std::string, std::string>> specs;
  for (const std::string& spec : opts.corpus_specs) {
    specs.push_back(parse_corpus_spec(spec));
  }
  const std::shared_ptr<const Vocabulary> vocab =
      build_vocab(specs, opts.min_count);
  NgramModel model(vocab, opts.ngram);
  std::size_t doc_count = 0;
  for (const surplex::Corpus& corpus : load_corpora(specs, *vocab)) {
    model.fine_tune(corpus.documents, opts.weight);
    doc_count += corpus.documents.size();
  }
  model.save_snapshot(opts.out_path);
  std::cout << "trained on " << doc_count << " documents (vocabulary "
            << vocab->size() << " entries)\n"
            << "wrote " << opts.out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "surplex: self-consuming training-loop laboratory — simulate "
      "collapse, measure it, and filter training data against it"};
  app.require_subcommand(1);

  SimulateOpts sim;
  CLI::App* simulate =
      app.add_subcommand("simulate", "Run the self-consumption experiment");
  simulate->set_config("--config", "", "INI config file (flags override it)");
  simulate->allow_config_extras(CLI::config_extras_mode::error);
  simulate->add_option("--corpus", sim.corpus_specs,
                       "Human corpus JSONL, label=path or bare path "
                       "(repeatable; default corpus.jsonl)");
  simulate->add_option("--out,-o", sim.out_dir, "Output directory");
  simulate->add_option("--ci", sim.ci_path,
                       "Four-choice inference items JSONL (optional)");
  simulate->add_option("--model-snapshot", sim.snapshot_path,
                       "Start from a saved model instead of a fresh one");
  simulate->add_option("--remote-url", sim.remote_url,
                       "Back the run with a remote completion endpoint");
  simulate->add_option("--remote-auth-env", sim.remote_auth_env,
                       "Environment variable holding the bearer token");
  simulate->add_option("--label", sim.label,
                       "Run label for reports (default: strategy name)");
  simulate->add_option("--strategy", sim.strategy_name,
                       "ai-only | human-only | mixed | random-human | "
                       "random-ai | top-entropy | top-surplexity");
  simulate->add_option("--human-fraction", sim.human_fraction,
                       "Human share for the mixed strategy");
  simulate->add_option("--k,--prompt-len", sim.config.prompt_len,
                       "Prompt length k (human prefix per document)");
  simulate->add_option("--L,--max-doc-len", sim.config.max_doc_len,
                       "Total document budget L (prompt + continuation)");
  simulate->add_option("--T,--steps", sim.config.steps,
                       "Number of fine-tuning steps T");
  simulate->add_option("--z,--select-size", sim.config.select_size,
                       "Training documents selected per step z");
  simulate->add_option("--n-prompts", sim.config.n_prompts,
                       "Number of fixed prompts");
  simulate->add_option("--repeats", sim.config.repeats,
                       "Independent repeats (reported as mean ± stderr)");
  simulate->add_option("--seed", sim.config.master_seed, "Master seed");
  simulate->add_option("--threads", sim.config.threads,
                       "Worker threads for generation and evaluation");
  simulate->add_option("--temperature", sim.config.sampling.temperature,
                       "Sampling temperature");
  simulate->add_option("--top-k", sim.config.sampling.top_k,
                       "Sampling truncation (top-k)");
  simulate->add_flag("--greedy", sim.config.sampling.greedy,
                     "Argmax decoding instead of sampling");
  simulate->add_flag("--stop-at-eos,!--no-stop-at-eos",
                     sim.config.sampling.stop_at_eos,
                     "Stop generation at the end-of-sequence token");
  simulate->add_option("--fine-tune-weight", sim.config.fine_tune_weight,
                       "Count weight per fine-tuning pass");
  simulate->add_option("--eval-docs", sim.config.eval.n_eval_docs,
                       "Held-out human documents for next-token metrics");
  simulate->add_option("--eval-prompt-tokens", sim.config.eval.prompt_tokens,
                       "Prompt length for next-token evaluation");
  simulate->add_option("--eval-top-n", sim.config.eval.top_n,
                       "Distribution truncation for next-token metrics");
  simulate->add_option("--tau", sim.config.eval.tau,
                       "Collapsed-prediction threshold");
  simulate->add_flag("--accumulate", sim.config.accumulate_pool,
                     "Keep earlier generations selectable at later steps");
  simulate->add_flag("--score-against-initial",
                     sim.config.score_against_initial,
                     "Rank top-z strategies under the step-0 model");
  simulate->add_flag("--pretrain,!--no-pretrain", sim.config.pretrain_on_human,
                     "Absorb the human training pool before step 0");
  simulate->add_flag("--save-snapshots", sim.save_snapshots,
                     "Persist a model snapshot after every step");
  simulate->add_option("--order", sim.ngram.order, "Model order (n)");
  simulate->add_option("--alpha", sim.ngram.alpha, "Add-k smoothing constant");
  simulate->add_option("--backoff", sim.ngram.backoff_lambda,
                       "Interpolation weight of the highest order");
  simulate->add_option("--min-count", sim.min_count,
                       "Minimum token count for the vocabulary");

  MetricsOpts met;
  CLI::App* metrics =
      app.add_subcommand("metrics", "Score documents in a corpus file");
  metrics->add_option("input", met.input, "Corpus JSONL (or CI items for ci)")
      ->required();
  metrics->add_option("--metric", met.metric,
                      "entropy | surplexity | gini | collapsed | ci");
  metrics->add_option("--snapshot", met.snapshot_path,
                      "Model snapshot (required for all but entropy)");
  metrics->add_option("--out", met.out_path, "Write CSV here instead of TSV "
                                             "to stdout");
  metrics->add_option("--prompt-tokens", met.prompt_tokens,
                      "Prompt length for gini/collapsed");
  metrics->add_option("--top-n", met.top_n,
                      "Distribution truncation for gini/collapsed");
  metrics->add_option("--tau", met.tau, "Collapsed threshold");
  metrics->add_option("--min-count", met.min_count,
                      "Minimum token count when building a vocabulary");

  FilterOpts fil;
  CLI::App* filter = app.add_subcommand(
      "filter", "Keep the top-z documents by surplexity or entropy");
  filter->add_option("input", fil.input, "Corpus JSONL")->required();
  filter->add_option("--by", fil.by, "surplexity | entropy");
  filter->add_option("--snapshot", fil.snapshot_path,
                     "Model snapshot (required for surplexity)");
  filter->add_option("--z", fil.z, "Documents to keep");
  filter->add_option("--out", fil.out_path, "Filtered JSONL path");
  filter->add_option("--scores", fil.scores_path,
                     "Score sidecar CSV path (default <out>.scores.csv)");
  filter->add_option("--min-count", fil.min_count,
                     "Minimum token count when building a vocabulary");

  ReportOpts rep;
  CLI::App* report = app.add_subcommand(
      "report", "Render SVG charts and a summary table from run directories");
  report->add_option("runs", rep.run_dirs, "Persisted run directories")
      ->required();
  report->add_option("--out", rep.out_dir, "Report output directory");

  TrainOpts tra;
  CLI::App* train = app.add_subcommand(
      "train", "Fit the reference model on a corpus and save a snapshot");
  train->add_option("--corpus", tra.corpus_specs,
                    "Corpus JSONL, label=path or bare path (repeatable)")
      ->required();
  train->add_option("--out", tra.out_path, "Snapshot path");
  train->add_option("--weight", tra.weight, "Count weight");
  train->add_option("--order", tra.ngram.order, "Model order (n)");
  train->add_option("--alpha", tra.ngram.alpha, "Add-k smoothing constant");
  train->add_option("--backoff", tra.ngram.backoff_lambda,
                    "Interpolation weight of the highest order");
  train->add_option("--min-count", tra.min_count,
                    "Minimum token count for the vocabulary");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (sim.corpus_specs.empty()) sim.corpus_specs.push_back("corpus.jsonl");

  try {
    if (simulate->parsed()) return run_simulate(sim);
    if (metrics->parsed()) return run_metrics(met);
    if (filter->parsed()) return run_filter(fil);
    if (report->parsed()) return run_report(rep);
    if (train->parsed()) return run_train(tra);
  } catch (const surplex::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
