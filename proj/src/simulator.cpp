#include "surplex/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>
#include <memory>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "surplex/errors.hpp"
#include "surplex/io.hpp"
#include "surplex/ngram_model.hpp"
#include "surplex/parallel.hpp"
#include "surplex/rng.hpp"

namespace surplex {
namespace {

constexpr std::uint64_t kGenerationChannel = 0;
constexpr std::uint64_t kSelectionChannel = 1;

std::string padded_index(std::size_t i) {
  std::string digits = std::to_string(i);
  return std::string(digits.size() >= 6 ? 0 : 6 - digits.size(), '0') + digits;
}

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed) {
  const unsigned char* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed ^ 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::uint64_t> fingerprint_prompts(const PromptSet& prompts) {
  std::vector<std::uint64_t> out;
  out.reserve(prompts.prompts.size());
  for (const Prompt& p : prompts.prompts) {
    std::uint64_t h = fnv1a(p.source_id.data(), p.source_id.size(), 0);
    h = fnv1a(p.tokens.data(), p.tokens.size() * sizeof(TokenId), h);
    out.push_back(h);
  }
  return out;
}

double mean_of(std::span<const double> values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

struct StepValues {
  double entropy = 0.0;
  double gini = 0.0;
  double collapsed_pct = 0.0;
  double surplexity = 0.0;
  double ci_accuracy = 0.0;
  bool has_ci = false;
};

GenerationSet generate_set(const LanguageModel& model, const SimConfig& config,
                           std::span<const Prompt> prompts, std::size_t repeat,
                           int step) {
  GenerationSet set;
  set.step = step;
  set.documents.resize(prompts.size());
  const std::size_t budget = config.max_doc_len - config.prompt_len;
  parallel_for(prompts.size(), config.threads, [&](std::size_t i) {
    SamplingConfig sampling = config.sampling;
    sampling.seed = derive_seed(
        config.master_seed,
        {repeat, static_cast<std::uint64_t>(step), kGenerationChannel, i});
    const std::vector<TokenId> continuation =
        model.generate_continuation(prompts[i].tokens, budget, sampling);
    Document doc;
    doc.id = "gen:" + std::to_string(step) + ":" + padded_index(i);
    doc.tokens.reserve(prompts[i].tokens.size() + continuation.size());
    doc.tokens = prompts[i].tokens;
    doc.tokens.insert(doc.tokens.end(), continuation.begin(),
                      continuation.end());
    doc.origin = Origin::ai(step);
    doc.source_label = prompts[i].source_label;
    set.documents[i] = std::move(doc);
  });
  return set;
}

void check_generation(const GenerationSet& set,
                      std::span<const Prompt> prompts,
                      const SimConfig& config) {
  if (set.documents.size() != prompts.size()) {
    throw Error("generation produced a wrong-sized set");
  }
  for (std::size_t i = 0; i < set.documents.size(); ++i) {
    const Document& doc = set.documents[i];
    if (doc.tokens.size() > config.max_doc_len) {
      throw Error("generated document " + doc.id + " exceeds the length cap");
    }
    if (doc.tokens.size() < config.prompt_len ||
        !std::equal(prompts[i].tokens.begin(), prompts[i].tokens.end(),
                    doc.tokens.begin())) {
      throw Error("generated document " + doc.id +
                  " does not start with its prompt");
    }
  }
}

StepValues evaluate_step(const LanguageModel& model, const GenerationSet& gen,
                         std::span<const Document> eval_docs,
                         std::span<const CiItem> ci_items,
                         const SimConfig& config) {
  StepValues values;

  std::vector<double> entropies(gen.documents.size());
  parallel_for(gen.documents.size(), config.threads, [&](std::size_t i) {
    entropies[i] = linguistic_entropy(gen.documents[i]);
  });
  values.entropy = mean_of(entropies);

  std::vector<double> surprises(gen.documents.size());
  parallel_for(gen.documents.size(), config.threads, [&](std::size_t i) {
    surprises[i] = surplexity(model, gen.documents[i]);
  });
  values.surplexity = mean_of(surprises);

  NextTokenEvalOptions eval_options;
  eval_options.prompt_tokens = config.eval.prompt_tokens;
  eval_options.top_n = config.eval.top_n;
  eval_options.tau = config.eval.tau;
  eval_options.threads = config.threads;
  const NextTokenEval eval = eval_next_token(model, eval_docs, eval_options);
  values.gini = eval.mean_gini;
  values.collapsed_pct = eval.collapsed_pct;

  if (!ci_items.empty()) {
    values.has_ci = true;
    values.ci_accuracy = ci_accuracy(model, ci_items).accuracy;
  }
  return values;
}

// Fixed series layout per repeat: the plain metrics, then their deltas
// against step 0.
std::vector<std::string> series_names(bool has_ci) {
  std::vector<std::string> names = {"entropy", "gini", "collapsed_pct",
                                    "surplexity"};
  if (has_ci) names.push_back("ci_accuracy");
  const std::size_t plain = names.size();
  for (std::size_t i = 0; i < plain; ++i) names.push_back(names[i] + "_delta");
  return names;
}

void append_step(RepeatRecord& rep, const StepValues& now,
                 const StepValues& baseline) {
  std::size_t slot = 0;
  auto push = [&](double value) { rep.series[slot++].second.push_back(value); };
  push(now.entropy);
  push(now.gini);
  push(now.collapsed_pct);
  push(now.surplexity);
  if (now.has_ci) push(now.ci_accuracy);
  push(now.entropy - baseline.entropy);
  push(now.gini - baseline.gini);
  push(now.collapsed_pct - baseline.collapsed_pct);
  push(now.surplexity - baseline.surplexity);
  if (now.has_ci) push(now.ci_accuracy - baseline.ci_accuracy);
}

std::string summary_line(std::size_t repeat, int step, std::size_t total,
                         const StepValues& v, double seconds) {
  std::ostringstream out;
  out << "[repeat " << repeat << "] step " << step << "/" << total
      << ": entropy " << format_double(v.entropy) << " gini "
      << format_double(v.gini) << " collapsed " << format_double(v.collapsed_pct)
      << "% surplexity " << format_double(v.surplexity);
  if (v.has_ci) out << " ci " << format_double(v.ci_accuracy);
  out << " (" << format_double(seconds) << "s)";
  return out.str();
}

void maybe_snapshot(const LanguageModel& model, const std::string& snapshot_dir,
                    std::size_t repeat, int step, RepeatRecord& rep) {
  if (snapshot_dir.empty()) return;
  const auto* ngram = dynamic_cast<const NgramModel*>(&model);
  if (ngram == nullptr) return;  // remote backends have nothing to save
  const std::string dir =
      snapshot_dir + "/repeat_" + std::to_string(repeat);
  ensure_directory(dir);
  const std::string path = dir + "/step_" + std::to_string(step) + ".json";
  ngram->save_snapshot(path);
  rep.snapshot_paths.push_back(path);
}

nlohmann::json config_to_json(const RunRecord& record) {
  const SimConfig& c = record.config;
  nlohmann::json j;
  j["k"] = c.prompt_len;
  j["L"] = c.max_doc_len;
  j["T"] = c.steps;
  j["z"] = c.select_size;
  j["n_prompts"] = c.n_prompts;
  j["strategy"] = {{"name", c.strategy.name()},
                   {"human_fraction", c.strategy.human_fraction}};
  j["sampling"] = {{"temperature", c.sampling.temperature},
                   {"top_k", c.sampling.top_k},
                   {"greedy", c.sampling.greedy},
                   {"stop_at_eos", c.sampling.stop_at_eos}};
  j["fine_tune_weight"] = c.fine_tune_weight;
  j["eval"] = {{"n_eval_docs", c.eval.n_eval_docs},
               {"prompt_tokens", c.eval.prompt_tokens},
               {"top_n", c.eval.top_n},
               {"tau", c.eval.tau}};
  j["master_seed"] = c.master_seed;
  j["repeats"] = c.repeats;
  j["accumulate_pool"] = c.accumulate_pool;
  j["score_against_initial"] = c.score_against_initial;
  j["pretrain_on_human"] = c.pretrain_on_human;
  j["threads"] = c.threads;
  nlohmann::json corpora = nlohmann::json::array();
  for (std::size_t i = 0; i < record.corpus_labels.size(); ++i) {
    corpora.push_back(
        {{"path", i < record.corpus_paths.size() ? record.corpus_paths[i] : ""},
         {"label", record.corpus_labels[i]}});
  }
  j["corpora"] = corpora;
  j["ci_items"] = record.ci_path;
  j["run_label"] = record.run_label;
  return j;
}

void config_from_json(const nlohmann::json& j, RunRecord& record) {
  SimConfig c;
  c.prompt_len = j.at("k").get<std::size_t>();
  c.max_doc_len = j.at("L").get<std::size_t>();
  c.steps = j.at("T").get<std::size_t>();
  c.select_size = j.at("z").get<std::size_t>();
  c.n_prompts = j.at("n_prompts").get<std::size_t>();
  c.strategy = Strategy::parse(
      j.at("strategy").at("name").get<std::string>(),
      j.at("strategy").value("human_fraction", 0.5));
  c.sampling.temperature = j.at("sampling").value("temperature", 0.8);
  c.sampling.top_k = j.at("sampling").value("top_k", std::size_t{40});
  c.sampling.greedy = j.at("sampling").value("greedy", false);
  c.sampling.stop_at_eos = j.at("sampling").value("stop_at_eos", true);
  c.fine_tune_weight = j.value("fine_tune_weight", 1.0);
  c.eval.n_eval_docs = j.at("eval").value("n_eval_docs", std::size_t{1000});
  c.eval.prompt_tokens = j.at("eval").value("prompt_tokens", std::size_t{32});
  c.eval.top_n = j.at("eval").value("top_n", std::size_t{100});
  c.eval.tau = j.at("eval").value("tau", 0.99);
  c.master_seed = j.at("master_seed").get<std::uint64_t>();
  c.repeats = j.at("repeats").get<std::size_t>();
  c.accumulate_pool = j.value("accumulate_pool", false);
  c.score_against_initial = j.value("score_against_initial", false);
  c.pretrain_on_human = j.value("pretrain_on_human", true);
  c.threads = j.value("threads", std::size_t{1});
  record.config = c;
  record.run_label = j.value("run_label", c.strategy.name());
  if (j.contains("corpora")) {
    for (const auto& entry : j.at("corpora")) {
      record.corpus_paths.push_back(entry.value("path", ""));
      record.corpus_labels.push_back(entry.value("label", ""));
    }
  }
  record.ci_path = j.value("ci_items", "");
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += ch;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

}  // namespace

void SimConfig::validate() const {
  if (prompt_len < 1) throw ConfigError("k must be at least 1");
  if (prompt_len >= max_doc_len) throw ConfigError("k must be < L");
  if (steps < 1) throw ConfigError("T must be at least 1");
  if (select_size < 1) throw ConfigError("z must be at least 1");
  if (n_prompts < 1) throw ConfigError("n_prompts must be at least 1");
  if (repeats < 1) throw ConfigError("repeats must be at least 1");
  if (threads < 1) throw ConfigError("threads must be at least 1");
  if (!(fine_tune_weight > 0.0)) {
    throw ConfigError("fine_tune_weight must be positive");
  }
  if (eval.n_eval_docs < 1) throw ConfigError("n_eval_docs must be at least 1");
  if (eval.prompt_tokens < 1) {
    throw ConfigError("eval prompt_tokens must be at least 1");
  }
  if (eval.top_n < 1) throw ConfigError("eval top_n must be at least 1");
  if (!(eval.tau > 0.0 && eval.tau <= 1.0)) {
    throw ConfigError("tau must be in (0, 1]");
  }
  sampling.validate();
  strategy.validate();
}

RunInputs prepare_run_inputs(const SimConfig& config,
                             std::span<const Corpus> corpora) {
  config.validate();
  if (corpora.empty()) throw ConfigError("at least one corpus is required");
  std::unordered_set<std::string> labels;
  for (const Corpus& corpus : corpora) {
    if (!labels.insert(corpus.label).second) {
      throw ConfigError("duplicate corpus label: " + corpus.label);
    }
  }

  std::vector<Document> all_docs;
  for (const Corpus& corpus : corpora) {
    all_docs.insert(all_docs.end(), corpus.documents.begin(),
                    corpus.documents.end());
  }

  // Eval holdout first: the last n_eval_docs documents (in pool order) that
  // can seed an evaluation prompt. Everything else stays trainable.
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < all_docs.size(); ++i) {
    if (all_docs[i].tokens.size() >= config.eval.prompt_tokens) {
      eligible.push_back(i);
    }
  }
  if (eligible.size() < config.eval.n_eval_docs) {
    throw Error("not enough evaluation documents: need " +
                std::to_string(config.eval.n_eval_docs) + ", corpus has " +
                std::to_string(eligible.size()) + " long enough");
  }
  std::vector<bool> is_eval(all_docs.size(), false);
  for (std::size_t i = eligible.size() - config.eval.n_eval_docs;
       i < eligible.size(); ++i) {
    is_eval[eligible[i]] = true;
  }

  RunInputs inputs;
  for (std::size_t i = 0; i < all_docs.size(); ++i) {
    if (is_eval[i]) {
      inputs.eval_docs.push_back(std::move(all_docs[i]));
    } else {
      inputs.train_docs.push_back(std::move(all_docs[i]));
    }
  }

  inputs.prompts = make_prompts(inputs.train_docs, config.prompt_len);
  if (inputs.prompts.prompts.size() < config.n_prompts) {
    throw Error("not enough prompt documents: need " +
                std::to_string(config.n_prompts) + ", training pool has " +
                std::to_string(inputs.prompts.prompts.size()) +
                " long enough");
  }
  inputs.prompts.prompts.resize(config.n_prompts);
  return inputs;
}

RunRecord run_autophagy(const SimConfig& config,
                        std::span<const Corpus> corpora,
                        std::span<const CiItem> ci_items,
                        const LanguageModel& base_model,
                        const std::string& snapshot_dir,
                        const RunCallbacks& callbacks) {
  RunInputs inputs = prepare_run_inputs(config, corpora);

  RunRecord record;
  record.config = config;
  record.run_label = config.strategy.name();
  for (const Corpus& corpus : corpora) {
    record.corpus_labels.push_back(corpus.label);
  }

  // The step-0 model, shared by every repeat: the caller's model plus one
  // absorption pass over the human training pool.
  std::unique_ptr<LanguageModel> initial = base_model.clone();
  if (config.pretrain_on_human) {
    try {
      initial->fine_tune(inputs.train_docs, 1.0);
    } catch (const std::exception& e) {
      record.failed = true;
      record.failure_message = e.what();
      return record;  // nothing ran; the caller still gets a marked record
    }
  }

  const std::vector<std::uint64_t> prompt_marks =
      fingerprint_prompts(inputs.prompts);
  std::unordered_set<std::string> eval_ids;
  for (const Document& doc : inputs.eval_docs) eval_ids.insert(doc.id);

  const bool has_ci = !ci_items.empty();
  const std::span<const Prompt> prompts(inputs.prompts.prompts);

  for (std::size_t r = 0; r < config.repeats; ++r) {
    RepeatRecord rep;
    rep.repeat = r;
    for (const std::string& name : series_names(has_ci)) {
      rep.series.emplace_back(name, std::vector<double>{});
    }
    try {
      std::unique_ptr<LanguageModel> model = initial->clone();
      maybe_snapshot(*model, snapshot_dir, r, 0, rep);

      const auto step0_start = std::chrono::steady_clock::now();
      GenerationSet baseline_set = generate_set(*model, config, prompts, r, 0);
      check_generation(baseline_set, prompts, config);
      const StepValues baseline =
          evaluate_step(*model, baseline_set, inputs.eval_docs, ci_items,
                        config);
      const double step0_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                        step0_start)
              .count();
      append_step(rep, baseline, baseline);
      rep.step_seconds.push_back(step0_seconds);
      if (callbacks.info) {
        callbacks.info(summary_line(r, 0, config.steps, baseline,
                                    step0_seconds));
      }

      std::vector<Document> older_generations;
      for (int j = 1; j <= static_cast<int>(config.steps); ++j) {
        const auto step_start = std::chrono::steady_clock::now();

        GenerationSet gen = generate_set(*model, config, prompts, r, j);
        check_generation(gen, prompts, config);
        if (fingerprint_prompts(inputs.prompts) != prompt_marks) {
          throw Error("prompt set mutated during the run");
        }

        std::vector<Document> pool;
        pool.reserve(inputs.train_docs.size() + older_generations.size() +
                     gen.documents.size());
        pool.insert(pool.end(), inputs.train_docs.begin(),
                    inputs.train_docs.end());
        if (config.accumulate_pool) {
          pool.insert(pool.end(), older_generations.begin(),
                      older_generations.end());
        }
        pool.insert(pool.end(), gen.documents.begin(), gen.documents.end());

        SelectionOptions options;
        options.z = config.select_size;
        options.seed = derive_seed(
            config.master_seed,
            {r, static_cast<std::uint64_t>(j), kSelectionChannel});
        options.model =
            config.score_against_initial ? initial.get() : model.get();
        options.threads = config.threads;
        auto [selected, selection_report] =
            select_training_set(pool, config.strategy, options);

        for (const Document& doc : selected) {
          if (eval_ids.count(doc.id) > 0) {
            throw Error("evaluation document " + doc.id +
                        " leaked into the training set");
          }
        }

        model->fine_tune(selected, config.fine_tune_weight);
        maybe_snapshot(*model, snapshot_dir, r, j, rep);

        const StepValues values =
            evaluate_step(*model, gen, inputs.eval_docs, ci_items, config);
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                          step_start)
                .count();
        append_step(rep, values, baseline);
        rep.selections.push_back(std::move(selection_report));
        rep.step_seconds.push_back(seconds);
        if (callbacks.info) {
          callbacks.info(summary_line(r, j, config.steps, values, seconds));
        }

        if (config.accumulate_pool) {
          older_generations.insert(older_generations.end(),
                                   gen.documents.begin(),
                                   gen.documents.end());
        }
      }
      record.repeats.push_back(std::move(rep));
    } catch (const std::exception& e) {
      record.repeats.push_back(std::move(rep));  // keep the completed steps
      record.failed = true;
      record.failure_message = e.what();
      break;
    }
  }
  return record;
}

std::vector<std::string> metric_names(const RunRecord& record) {
  std::vector<std::string> names;
  if (record.repeats.empty()) return names;
  for (const auto& [name, values] : record.repeats.front().series) {
    names.push_back(name);
  }
  return names;
}

std::vector<MetricSample> aggregate_metric(const RunRecord& record,
                                           const std::string& name) {
  std::size_t steps = 0;
  bool found = false;
  for (const RepeatRecord& rep : record.repeats) {
    for (const auto& [series_name, values] : rep.series) {
      if (series_name == name) {
        steps = found ? std::min(steps, values.size()) : values.size();
        found = true;
      }
    }
  }
  if (!found) throw Error("run has no metric named '" + name + "'");
  std::vector<MetricSample> samples;
  samples.reserve(steps);
  for (std::size_t step = 0; step < steps; ++step) {
    std::vector<double> values;
    for (const RepeatRecord& rep : record.repeats) {
      for (const auto& [series_name, series_values] : rep.series) {
        if (series_name == name) values.push_back(series_values[step]);
      }
    }
    samples.push_back(MetricSample::from_values(name, std::move(values)));
  }
  return samples;
}

PersistedPaths persist_run(const RunRecord& record, const std::string& dir) {
  ensure_directory(dir);
  PersistedPaths paths;
  paths.config_path = dir + "/config.json";
  paths.metrics_path = dir + "/metrics.csv";
  paths.selection_path = dir + "/selection.csv";

  write_file(paths.config_path, config_to_json(record).dump(2) + "\n");

  std::ostringstream metrics;
  metrics << "repeat,step,metric,value\n";
  for (const RepeatRecord& rep : record.repeats) {
    for (const auto& [name, values] : rep.series) {
      for (std::size_t step = 0; step < values.size(); ++step) {
        metrics << rep.repeat << ',' << step << ',' << name << ','
                << format_double(values[step]) << '\n';
      }
    }
  }
  write_file(paths.metrics_path, metrics.str());

  std::ostringstream selection;
  selection << "repeat,step,source_label,origin,count\n";
  for (const RepeatRecord& rep : record.repeats) {
    for (std::size_t s = 0; s < rep.selections.size(); ++s) {
      for (const auto& [key, count] : rep.selections[s].by_source_origin) {
        selection << rep.repeat << ',' << (s + 1) << ',' << key.first << ','
                  << key.second << ',' << count << '\n';
      }
    }
  }
  write_file(paths.selection_path, selection.str());

  if (record.failed) {
    write_file(dir + "/failure.txt", record.failure_message + "\n");
  }
  return paths;
}

RunRecord load_run(const std::string& dir) {
  RunRecord record;
  nlohmann::json config_json;
  try {
    config_json = nlohmann::json::parse(read_file(dir + "/config.json"));
    config_from_json(config_json, record);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad run config in " + dir + ": " + e.what());
  }

  const std::vector<std::string> metric_lines =
      read_lines(dir + "/metrics.csv");
  if (metric_lines.empty() ||
      metric_lines.front() != "repeat,step,metric,value") {
    throw IoError("bad metrics.csv header in " + dir);
  }
  std::map<std::size_t, RepeatRecord> repeats;
  for (std::size_t i = 1; i < metric_lines.size(); ++i) {
    if (metric_lines[i].empty()) continue;
    const auto fields = split_csv_line(metric_lines[i]);
    if (fields.size() != 4) {
      throw IoError(dir + "/metrics.csv:" + std::to_string(i + 1) +
                    ": expected 4 fields");
    }
    const std::size_t repeat = std::stoul(fields[0]);
    const std::size_t step = std::stoul(fields[1]);
    RepeatRecord& rep = repeats[repeat];
    rep.repeat = repeat;
    auto series = std::find_if(rep.series.begin(), rep.series.end(),
                               [&](const auto& s) { return s.first == fields[2]; });
    if (series == rep.series.end()) {
      rep.series.emplace_back(fields[2], std::vector<double>{});
      series = std::prev(rep.series.end());
    }
    if (step != series->second.size()) {
      throw IoError(dir + "/metrics.csv:" + std::to_string(i + 1) +
                    ": steps out of order for metric " + fields[2]);
    }
    series->second.push_back(parse_double(fields[3]));
  }
  for (auto& [index, rep] : repeats) {
    rep.selections.resize(record.config.steps);
    record.repeats.push_back(std::move(rep));
  }

  const std::vector<std::string> selection_lines =
      read_lines(dir + "/selection.csv");
  if (selection_lines.empty() ||
      selection_lines.front() != "repeat,step,source_label,origin,count") {
    throw IoError("bad selection.csv header in " + dir);
  }
  for (std::size_t i = 1; i < selection_lines.size(); ++i) {
    if (selection_lines[i].empty()) continue;
    const auto fields = split_csv_line(selection_lines[i]);
    if (fields.size() != 5) {
      throw IoError(dir + "/selection.csv:" + std::to_string(i + 1) +
                    ": expected 5 fields");
    }
    const std::size_t repeat = std::stoul(fields[0]);
    const std::size_t step = std::stoul(fields[1]);
    const std::size_t count = std::stoul(fields[4]);
    if (repeat >= record.repeats.size() || step < 1 ||
        step > record.config.steps) {
      throw IoError(dir + "/selection.csv:" + std::to_string(i + 1) +
                    ": repeat/step out of range");
    }
    SelectionReport& report = record.repeats[repeat].selections[step - 1];
    report.by_source_origin[{fields[2], fields[3]}] += count;
    report.by_source[fields[2]] += count;
    report.by_origin[fields[3]] += count;
    report.selected += count;
  }

  if (file_exists(dir + "/failure.txt")) {
    record.failed = true;
    record.failure_message = read_file(dir + "/failure.txt");
  }
  return record;
}

ComparisonTable compare_runs(std::span<const RunRecord> records) {
  if (records.empty()) throw Error("no runs to compare");
  const SimConfig& first = records.front().config;
  for (const RunRecord& record : records) {
    if (record.config.prompt_len != first.prompt_len) {
      throw Error("runs disagree on k");
    }
    if (record.config.max_doc_len != first.max_doc_len) {
      throw Error("runs disagree on L");
    }
    if (record.config.steps != first.steps) {
      throw Error("runs disagree on T");
    }
  }

  ComparisonTable table;
  table.steps = first.steps + 1;  // every series carries baseline + T steps
  std::vector<std::string> labels;
  for (const RunRecord& record : records) {
    std::string label = record.run_label;
    std::size_t suffix = 2;
    while (std::find(labels.begin(), labels.end(), label) != labels.end()) {
      label = record.run_label + " (" + std::to_string(suffix++) + ")";
    }
    labels.push_back(label);
  }

  for (const std::string& name : metric_names(records.front())) {
    std::vector<ComparisonSeries> series;
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto names = metric_names(records[i]);
      if (std::find(names.begin(), names.end(), name) == names.end()) {
        continue;
      }
      ComparisonSeries s;
      s.label = labels[i];
      s.per_step = aggregate_metric(records[i], name);
      series.push_back(std::move(s));
    }
    if (!series.empty()) {
      table.metrics.emplace_back(name, std::move(series));
    }
  }
  return table;
}

}  // namespace surplex
