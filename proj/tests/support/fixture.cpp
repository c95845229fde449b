#include "support/fixture.hpp"

#include <algorithm>
#include <array>

#include <json.hpp>

#include "surplex/errors.hpp"
#include "surplex/io.hpp"
#include "surplex/rng.hpp"

namespace surplex::test_support {
namespace {

constexpr std::size_t kWordTypes = 1100;
constexpr std::size_t kStarters = 40;
constexpr std::size_t kStickyStride = 5;  // every 5th word may self-repeat
constexpr std::uint64_t kStructureSeed = 0xF1B1E5EEDULL;

const char* const kOnsets[] = {"b",  "br", "c", "cl", "d",  "dr", "f",
                               "fl", "g",  "gr", "h", "j",  "k",  "l",
                               "m",  "n",  "p",  "pr", "qu", "r",  "s",
                               "sl", "t",  "tr", "v",  "w"};
const char* const kNuclei[] = {"a", "e", "i", "o", "u", "ai", "ea", "oo", "ou"};
const char* const kCodas[] = {"ck", "d",  "l", "m", "n",  "nd",
                              "r",  "rk", "s", "st", "t",  "th"};

std::vector<std::string> word_list() {
  constexpr std::size_t n_nuclei = sizeof(kNuclei) / sizeof(kNuclei[0]);
  constexpr std::size_t n_codas = sizeof(kCodas) / sizeof(kCodas[0]);
  std::vector<std::string> words;
  words.reserve(kWordTypes);
  for (std::size_t i = 0; i < kWordTypes; ++i) {
    const std::size_t onset = i / (n_nuclei * n_codas);
    const std::size_t nucleus = (i / n_codas) % n_nuclei;
    const std::size_t coda = i % n_codas;
    words.push_back(std::string(kOnsets[onset]) + kNuclei[nucleus] +
                    kCodas[coda]);
  }
  return words;
}

struct Chain {
  // successors[w] lists candidate next words; weights are cumulative and
  // shared by every word of the chain.
  std::vector<std::vector<std::uint16_t>> successors;
  std::vector<double> cumulative_weights;
  std::vector<std::uint16_t> starters;
};

// Geometrically decaying successor weights: position i carries ratio^i, so
// the head of the list dominates while a long tail stays plausible.
std::vector<double> geometric_cumulative(std::size_t count, double ratio) {
  std::vector<double> cumulative;
  cumulative.reserve(count);
  double total = 0.0;
  double weight = 1.0;
  for (std::size_t i = 0; i < count; ++i) {
    total += weight;
    cumulative.push_back(total);
    weight *= ratio;
  }
  return cumulative;
}

std::vector<std::uint16_t> distinct_words(Rng& rng, std::size_t count,
                                          std::uint16_t avoid) {
  std::vector<std::uint16_t> out;
  while (out.size() < count) {
    const auto candidate =
        static_cast<std::uint16_t>(rng.next_below(kWordTypes));
    if (candidate == avoid ||
        std::find(out.begin(), out.end(), candidate) != out.end()) {
      continue;
    }
    out.push_back(candidate);
  }
  return out;
}

// Both chains are built once from a fixed structure seed, so every fixture
// corpus shares the same vocabulary and transition graph; the config seed
// only drives which paths get walked.
struct Chains {
  std::vector<std::string> words = word_list();
  Chain alpha;
  Chain beta;

  Chains() {
    Rng rng(kStructureSeed);
    std::vector<std::uint16_t> starters =
        distinct_words(rng, kStarters, kWordTypes);  // avoid nothing
    alpha.cumulative_weights = geometric_cumulative(48, 0.85);
    beta.cumulative_weights = geometric_cumulative(96, 0.93);
    alpha.starters.assign(starters.begin(), starters.begin() + 12);
    beta.starters = starters;
    alpha.successors.reserve(kWordTypes);
    beta.successors.reserve(kWordTypes);
    for (std::size_t w = 0; w < kWordTypes; ++w) {
      const auto self = static_cast<std::uint16_t>(w);
      alpha.successors.push_back(
          distinct_words(rng, alpha.cumulative_weights.size(), self));
      beta.successors.push_back(
          distinct_words(rng, beta.cumulative_weights.size(), self));
      // Sticky words may follow themselves — the stutter and enumeration
      // runs of real text ("very very", list items). These short cycles
      // give a self-feeding training loop repetitive structure to amplify.
      if (w % kStickyStride == 3) {
        alpha.successors.back()[2] = self;
        beta.successors.back()[2] = self;
      }
    }
  }
};

const Chains& chains() {
  static const Chains instance;
  return instance;
}

std::uint16_t pick_weighted(const std::vector<std::uint16_t>& options,
                            const std::vector<double>& cumulative, Rng& rng) {
  const double r = rng.next_double() * cumulative.back();
  for (std::size_t i = 0; i < cumulative.size(); ++i) {
    if (r < cumulative[i]) return options[i];
  }
  return options.back();
}

// Once a word repeats it tends to keep going ("ha ha ha", enumeration
// runs), so stutters arrive as geometric bursts rather than lone doubles.
constexpr double kStutterContinue = 0.65;

std::string make_document_text(const Chain& chain,
                               const std::vector<std::string>& words,
                               Rng& rng) {
  const std::size_t n_words = 150 + rng.next_below(51);
  std::string text;
  text.reserve(n_words * 7);
  std::size_t sentence_left = 8 + rng.next_below(7);
  std::uint16_t current =
      chain.starters[rng.next_below(chain.starters.size())];
  std::uint16_t previous = kWordTypes;  // sentinel: no word emitted yet
  for (std::size_t emitted = 0; emitted < n_words; ++emitted) {
    if (!text.empty()) text += ' ';
    text += words[current];
    const bool stuttering = current == previous;
    previous = current;
    if (--sentence_left == 0 && emitted + 1 < n_words) {
      text += '.';
      sentence_left = 8 + rng.next_below(7);
      current = chain.starters[rng.next_below(chain.starters.size())];
    } else if (stuttering && rng.next_double() < kStutterContinue) {
      // keep the burst going
    } else {
      current = pick_weighted(chain.successors[current],
                              chain.cumulative_weights, rng);
    }
  }
  text += '.';
  return text;
}

}  // namespace

std::vector<RawDoc> make_fixture_docs(const FixtureConfig& config) {
  const Chains& c = chains();
  std::vector<RawDoc> docs;
  docs.reserve(config.n_docs);
  for (std::size_t i = 0; i < config.n_docs; ++i) {
    Rng rng(derive_seed(config.seed, {i}));
    const bool wide = rng.next_double() < config.beta_fraction;
    RawDoc doc;
    doc.source = wide ? "beta" : "alpha";
    doc.text = make_document_text(wide ? c.beta : c.alpha, c.words, rng);
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::string fixture_jsonl(const FixtureConfig& config) {
  std::string out;
  for (const RawDoc& doc : make_fixture_docs(config)) {
    nlohmann::json line;
    line["text"] = doc.text;
    line["source"] = doc.source;
    out += line.dump();
    out += '\n';
  }
  return out;
}

void write_fixture_corpus(const std::string& path,
                          const FixtureConfig& config) {
  write_file(path, fixture_jsonl(config));
}

CiFixture make_ci_fixture(std::span<const Document> docs,
                          const Vocabulary& vocab, std::size_t n_items,
                          std::uint64_t seed) {
  constexpr std::size_t kPromptTokens = 16;
  constexpr std::size_t kSpanTokens = 10;
  if (docs.empty()) throw Error("CI fixture needs documents");

  CiFixture fixture;
  std::size_t doc_cursor = 0;
  for (std::size_t item = 0; item < n_items; ++item) {
    Rng rng(derive_seed(seed, {item}));
    // Find a document whose continuation span has at least two distinct
    // tokens, so shuffles can differ from the original.
    const Document* doc = nullptr;
    std::vector<TokenId> span;
    for (std::size_t tries = 0; tries < docs.size(); ++tries) {
      const Document& candidate = docs[doc_cursor % docs.size()];
      ++doc_cursor;
      if (candidate.tokens.size() < kPromptTokens + kSpanTokens) continue;
      std::vector<TokenId> window(
          candidate.tokens.begin() + kPromptTokens,
          candidate.tokens.begin() + kPromptTokens + kSpanTokens);
      const bool varied =
          std::adjacent_find(window.begin(), window.end(),
                             std::not_equal_to<>()) != window.end();
      if (!varied) continue;
      doc = &candidate;
      span = std::move(window);
      break;
    }
    if (doc == nullptr) throw Error("no document long enough for a CI item");

    const std::vector<TokenId> prompt(doc->tokens.begin(),
                                      doc->tokens.begin() + kPromptTokens);
    std::array<std::vector<TokenId>, 3> distractors;
    for (std::vector<TokenId>& distractor : distractors) {
      distractor = span;
      do {
        for (std::size_t i = distractor.size(); i-- > 1;) {
          std::swap(distractor[i], distractor[rng.next_below(i + 1)]);
        }
      } while (distractor == span);
    }

    const int correct = static_cast<int>(rng.next_below(4));
    nlohmann::json row;
    row["prompt"] = detokenize(prompt, vocab);
    nlohmann::json candidates = nlohmann::json::array();
    std::size_t next_distractor = 0;
    for (int c = 0; c < 4; ++c) {
      const std::vector<TokenId>& tokens =
          (c == correct) ? span : distractors[next_distractor++];
      candidates.push_back(detokenize(tokens, vocab));
    }
    row["candidates"] = std::move(candidates);
    row["correct"] = correct;
    fixture.jsonl += row.dump();
    fixture.jsonl += '\n';
    fixture.correct_indices.push_back(correct);
  }
  return fixture;
}

}  // namespace surplex::test_support
