#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace surplex {

using TokenId = std::uint32_t;

// Reserved ids. Their surface forms contain ASCII punctuation, so the
// splitter can never produce them from real text.
constexpr TokenId kBosId = 0;
constexpr TokenId kEosId = 1;
constexpr TokenId kUnkId = 2;
constexpr std::size_t kNumReservedIds = 3;

// Splits text into surface tokens: words separated by Unicode whitespace,
// with each ASCII punctuation character emitted as its own single-character
// token. Case is preserved; non-ASCII bytes count as word characters.
std::vector<std::string> split_surface(std::string_view text);

// token-string <-> dense token-id bijection with fixed reserved ids.
// Immutable after build; safe for concurrent reads.
class Vocabulary {
 public:
  // Counts surface tokens across all streams and assigns ids 3..|V|-1 by
  // descending count, ties broken lexicographically. Tokens seen fewer than
  // min_count times are left out (they tokenize to UNK).
  static Vocabulary build(std::span<const std::string> streams,
                          std::size_t min_count = 1);

  TokenId id_of(std::string_view surface) const;  // kUnkId when absent
  const std::string& surface_of(TokenId id) const;
  bool contains(std::string_view surface) const;
  std::size_t size() const { return surfaces_.size(); }
  std::uint64_t count_of(TokenId id) const;

  // Line-delimited JSON, one {"token","id","count"} object per id, in id
  // order. load re-checks density and the reserved ids.
  void save_jsonl(const std::string& path) const;
  static Vocabulary load_jsonl(const std::string& path);

  // Rebuilds a vocabulary from (surface, count) rows listed in id order,
  // e.g. out of a model snapshot. Rows must start with the reserved tokens
  // and contain no duplicates.
  static Vocabulary from_entries(
      std::vector<std::pair<std::string, std::uint64_t>> rows);

 private:
  Vocabulary() = default;

  struct StringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const {
      return std::hash<std::string_view>{}(s);
    }
  };

  std::vector<std::string> surfaces_;
  std::vector<std::uint64_t> counts_;
  std::unordered_map<std::string, TokenId, StringHash, std::equal_to<>> ids_;
};

// Splits text and maps every surface form through the vocabulary; unknown
// forms become UNK. Empty text gives an empty sequence.
std::vector<TokenId> tokenize(std::string_view text, const Vocabulary& vocab);

// Space-joins the surface forms, dropping BOS and EOS. Out-of-range ids are
// a hard error.
std::string detokenize(std::span<const TokenId> ids, const Vocabulary& vocab);

}  // namespace surplex
