#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "surplex/corpus.hpp"
#include "surplex/tokenizer.hpp"

namespace surplex::test_support {

// Deterministic synthetic corpus: English-looking nonsense words emitted by
// two first-order word chains that share one vocabulary (~1,100 types).
// Source "alpha" walks moderately branchy successor sets (48 choices, top
// weight ~0.15); source "beta" walks wide ones (96 choices, near-flat). A
// minority of "sticky" words may repeat themselves, giving the language the
// stutter and enumeration runs real text has. Every conditional is capped
// well below the collapse threshold, so a model trained on this corpus
// starts with zero collapsed predictions. Documents run 150-200 words plus
// sentence periods, long enough for 96-token prompts.
struct FixtureConfig {
  std::size_t n_docs = 1000;
  std::uint64_t seed = 2024;
  double beta_fraction = 0.3;  // share of documents from the wide source
};

std::vector<RawDoc> make_fixture_docs(const FixtureConfig& config = {});
std::string fixture_jsonl(const FixtureConfig& config = {});
void write_fixture_corpus(const std::string& path,
                          const FixtureConfig& config = {});

// Four-choice continuation items: the prompt is a document prefix, the
// correct candidate is the verbatim next span, and the three distractors are
// shuffles of that span (same tokens, broken order). correct_indices records
// where the answer landed per item, so tests can compute the expected
// accuracy of a degenerate always-first-index scorer analytically.
struct CiFixture {
  std::string jsonl;
  std::vector<int> correct_indices;
};

CiFixture make_ci_fixture(std::span<const Document> docs,
                          const Vocabulary& vocab, std::size_t n_items,
                          std::uint64_t seed);

}  // namespace surplex::test_support
