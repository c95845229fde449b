#include "surplex/corpus.hpp"

#include <json.hpp>

#include "surplex/errors.hpp"
#include "surplex/io.hpp"

namespace surplex {

std::string Origin::label() const {
  if (kind == Kind::Human) return "human";
  return "ai:" + std::to_string(step);
}

std::vector<RawDoc> read_corpus_file(const std::string& path,
                                     std::size_t* skipped) {
  std::vector<RawDoc> docs;
  std::size_t bad = 0;
  for (const std::string& line : read_lines(path)) {
    nlohmann::json row = nlohmann::json::parse(line, nullptr, false);
    if (row.is_discarded() || !row.is_object() || !row.contains("text") ||
        !row["text"].is_string()) {
      ++bad;
      continue;
    }
    RawDoc doc;
    doc.text = row["text"].get<std::string>();
    if (row.contains("source") && row["source"].is_string()) {
      doc.source = row["source"].get<std::string>();
    }
    docs.push_back(std::move(doc));
  }
  if (skipped) *skipped = bad;
  return docs;
}

Corpus load_corpus(const std::string& path, const std::string& label,
                   const Vocabulary& vocab) {
  Corpus corpus;
  corpus.label = label;
  std::size_t line_no = 0;
  for (const std::string& line : read_lines(path)) {
    const std::size_t current = line_no++;
    nlohmann::json row = nlohmann::json::parse(line, nullptr, false);
    if (row.is_discarded() || !row.is_object() || !row.contains("text") ||
        !row["text"].is_string()) {
      ++corpus.skipped_lines;
      continue;
    }
    Document doc;
    doc.id = label + ":" + std::to_string(current);
    doc.tokens = tokenize(row["text"].get<std::string>(), vocab);
    if (doc.tokens.empty()) {
      ++corpus.skipped_lines;  // blank text carries no document
      continue;
    }
    doc.origin = Origin::human();
    doc.source_label = label;
    if (row.contains("source") && row["source"].is_string()) {
      doc.source_label = row["source"].get<std::string>();
    }
    corpus.documents.push_back(std::move(doc));
  }
  if (corpus.documents.empty()) {
    throw IoError("empty corpus: " + path);
  }
  return corpus;
}

PromptSet make_prompts(std::span<const Document> documents, std::size_t k) {
  if (k < 1) throw ConfigError("prompt length must be at least 1");
  PromptSet set;
  for (const Document& doc : documents) {
    if (doc.tokens.size() < k) {
      ++set.skipped_short;
      continue;
    }
    Prompt prompt;
    prompt.source_id = doc.id;
    prompt.source_label = doc.source_label;
    prompt.tokens.assign(doc.tokens.begin(), doc.tokens.begin() + k);
    set.prompts.push_back(std::move(prompt));
  }
  if (set.prompts.empty()) {
    throw Error("no documents are long enough to prompt from (k=" +
                std::to_string(k) + ")");
  }
  return set;
}

PromptSet make_prompts(const Corpus& corpus, std::size_t k) {
  return make_prompts(std::span<const Document>(corpus.documents), k);
}

}  // namespace surplex
