#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "surplex/tokenizer.hpp"

namespace surplex {

// Provenance tag: either human-authored or generated at a simulation step.
struct Origin {
  enum class Kind { Human, Ai };
  Kind kind = Kind::Human;
  int step = -1;  // generation step, meaningful for Ai only

  static Origin human() { return {Kind::Human, -1}; }
  static Origin ai(int step) { return {Kind::Ai, step}; }
  bool is_human() const { return kind == Kind::Human; }
  bool is_ai() const { return kind == Kind::Ai; }

  // "human" or "ai:<step>". Used in selection reports and CSV output.
  std::string label() const;

  friend bool operator==(const Origin&, const Origin&) = default;
};

struct Document {
  std::string id;               // unique within a pool, e.g. "sci:17"
  std::vector<TokenId> tokens;  // non-empty
  Origin origin;
  std::string source_label;     // corpus tag ("wiki", "sci", ...)
};

struct Corpus {
  std::string label;
  std::vector<Document> documents;
  std::size_t skipped_lines = 0;  // malformed or blank-text input lines
};

// One JSONL input line, before tokenization.
struct RawDoc {
  std::string text;
  std::string source;
};

// Parses a line-delimited JSON corpus file. Each line must be an object
// with a "text" string field; "source" is optional. Malformed lines and
// blank texts are skipped and counted via *skipped.
std::vector<RawDoc> read_corpus_file(const std::string& path,
                                     std::size_t* skipped = nullptr);

// Tokenizes raw docs into Human documents with ids "<label>:<line>".
// Zero valid documents is a hard error ("empty corpus").
Corpus load_corpus(const std::string& path, const std::string& label,
                   const Vocabulary& vocab);

struct Prompt {
  std::string source_id;     // id of the originating Human document
  std::string source_label;  // its corpus tag, carried into generated docs
  std::vector<TokenId> tokens;  // exactly k
};

struct PromptSet {
  std::vector<Prompt> prompts;
  std::size_t skipped_short = 0;  // documents with fewer than k tokens
};

// First k tokens of every long-enough document, in document order. The
// result is computed once per run and never mutated. Zero eligible
// documents is a hard error.
PromptSet make_prompts(std::span<const Document> documents, std::size_t k);
PromptSet make_prompts(const Corpus& corpus, std::size_t k);

}  // namespace surplex
