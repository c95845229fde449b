#include "surplex/tokenizer.hpp"

#include <algorithm>
#include <cstring>
#include <sstream>

#include <json.hpp>

#include "surplex/errors.hpp"
#include "surplex/io.hpp"

namespace surplex {
namespace {

constexpr std::string_view kBosSurface = "<bos>";
constexpr std::string_view kEosSurface = "<eos>";
constexpr std::string_view kUnkSurface = "<unk>";

bool is_ascii_punct(unsigned char c) {
  return (c >= '!' && c <= '/') || (c >= ':' && c <= '@') ||
         (c >= '[' && c <= '`') || (c >= '{' && c <= '~');
}

// Decodes one UTF-8 code point starting at text[i]; advances i past it.
// Malformed bytes are consumed one at a time and reported as U+FFFD, which
// downgrades them to ordinary word characters.
char32_t decode_utf8(std::string_view text, std::size_t& i) {
  const unsigned char c0 = static_cast<unsigned char>(text[i]);
  std::size_t len = 1;
  char32_t cp = c0;
  if (c0 < 0x80) {
    len = 1;
  } else if ((c0 & 0xe0) == 0xc0) {
    len = 2;
    cp = c0 & 0x1f;
  } else if ((c0 & 0xf0) == 0xe0) {
    len = 3;
    cp = c0 & 0x0f;
  } else if ((c0 & 0xf8) == 0xf0) {
    len = 4;
    cp = c0 & 0x07;
  } else {
    ++i;
    return 0xfffd;
  }
  if (i + len > text.size()) {
    ++i;
    return 0xfffd;
  }
  for (std::size_t k = 1; k < len; ++k) {
    const unsigned char ck = static_cast<unsigned char>(text[i + k]);
    if ((ck & 0xc0) != 0x80) {
      ++i;
      return 0xfffd;
    }
    cp = (cp << 6) | (ck & 0x3f);
  }
  i += len;
  return cp;
}

bool is_unicode_space(char32_t cp) {
  switch (cp) {
    case 0x09: case 0x0a: case 0x0b: case 0x0c: case 0x0d: case 0x20:
    case 0x85: case 0xa0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202f: case 0x205f: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200a;
  }
}

}  // namespace

std::vector<std::string> split_surface(std::string_view text) {
  std::vector<std::string> out;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) {
      out.push_back(word);
      word.clear();
    }
  };
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t start = i;
    const char32_t cp = decode_utf8(text, i);
    if (is_unicode_space(cp)) {
      flush();
    } else if (cp < 0x80 && is_ascii_punct(static_cast<unsigned char>(cp))) {
      flush();
      out.emplace_back(1, text[start]);
    } else {
      word.append(text.substr(start, i - start));
    }
  }
  flush();
  return out;
}

Vocabulary Vocabulary::build(std::span<const std::string> streams,
                             std::size_t min_count) {
  if (streams.empty()) throw ConfigError("vocabulary build: no input streams");
  std::unordered_map<std::string, std::uint64_t> counts;
  for (const std::string& stream : streams) {
    for (std::string& tok : split_surface(stream)) {
      counts[std::move(tok)] += 1;
    }
  }
  if (counts.empty()) {
    throw ConfigError("vocabulary build: streams contain no tokens");
  }

  std::vector<std::pair<std::string, std::uint64_t>> kept;
  kept.reserve(counts.size());
  for (auto& [surface, count] : counts) {
    if (count >= min_count) kept.emplace_back(surface, count);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary vocab;
  vocab.surfaces_ = {std::string(kBosSurface), std::string(kEosSurface),
                     std::string(kUnkSurface)};
  vocab.counts_ = {0, 0, 0};
  vocab.surfaces_.reserve(kNumReservedIds + kept.size());
  vocab.counts_.reserve(kNumReservedIds + kept.size());
  for (auto& [surface, count] : kept) {
    vocab.surfaces_.push_back(std::move(surface));
    vocab.counts_.push_back(count);
  }
  for (std::size_t id = 0; id < vocab.surfaces_.size(); ++id) {
    vocab.ids_.emplace(vocab.surfaces_[id], static_cast<TokenId>(id));
  }
  return vocab;
}

TokenId Vocabulary::id_of(std::string_view surface) const {
  auto it = ids_.find(surface);
  return it == ids_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::surface_of(TokenId id) const {
  if (id >= surfaces_.size()) {
    throw Error("token id out of range: " + std::to_string(id));
  }
  return surfaces_[id];
}

bool Vocabulary::contains(std::string_view surface) const {
  return ids_.find(surface) != ids_.end();
}

std::uint64_t Vocabulary::count_of(TokenId id) const {
  if (id >= counts_.size()) {
    throw Error("token id out of range: " + std::to_string(id));
  }
  return counts_[id];
}

void Vocabulary::save_jsonl(const std::string& path) const {
  std::ostringstream out;
  for (std::size_t id = 0; id < surfaces_.size(); ++id) {
    nlohmann::json row = {{"token", surfaces_[id]},
                          {"id", id},
                          {"count", counts_[id]}};
    out << row.dump() << '\n';
  }
  write_file(path, out.str());
}

Vocabulary Vocabulary::load_jsonl(const std::string& path) {
  Vocabulary vocab;
  std::size_t line_no = 0;
  for (const std::string& line : read_lines(path)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json row;
    try {
      row = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw IoError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!row.contains("token") || !row.contains("id") || !row.contains("count")) {
      throw IoError(path + ":" + std::to_string(line_no) +
                    ": vocabulary row needs token/id/count");
    }
    const std::size_t id = row["id"].get<std::size_t>();
    if (id != vocab.surfaces_.size()) {
      throw IoError(path + ":" + std::to_string(line_no) +
                    ": vocabulary ids must be dense and in order");
    }
    vocab.surfaces_.push_back(row["token"].get<std::string>());
    vocab.counts_.push_back(row["count"].get<std::uint64_t>());
  }
  if (vocab.surfaces_.size() < kNumReservedIds ||
      vocab.surfaces_[kBosId] != kBosSurface ||
      vocab.surfaces_[kEosId] != kEosSurface ||
      vocab.surfaces_[kUnkId] != kUnkSurface) {
    throw IoError(path + ": missing reserved tokens");
  }
  for (std::size_t id = 0; id < vocab.surfaces_.size(); ++id) {
    if (!vocab.ids_.emplace(vocab.surfaces_[id], static_cast<TokenId>(id)).second) {
      throw IoError(path + ": duplicate token '" + vocab.surfaces_[id] + "'");
    }
  }
  return vocab;
}

Vocabulary Vocabulary::from_entries(
    std::vector<std::pair<std::string, std::uint64_t>> rows) {
  if (rows.size() < kNumReservedIds || rows[kBosId].first != kBosSurface ||
      rows[kEosId].first != kEosSurface || rows[kUnkId].first != kUnkSurface) {
    throw Error("vocabulary rows must begin with the reserved tokens");
  }
  Vocabulary vocab;
  vocab.surfaces_.reserve(rows.size());
  vocab.counts_.reserve(rows.size());
  for (auto& [surface, count] : rows) {
    vocab.surfaces_.push_back(std::move(surface));
    vocab.counts_.push_back(count);
  }
  for (std::size_t id = 0; id < vocab.surfaces_.size(); ++id) {
    if (!vocab.ids_.emplace(vocab.surfaces_[id], static_cast<TokenId>(id)).second) {
      throw Error("duplicate token in vocabulary rows: '" +
                  vocab.surfaces_[id] + "'");
    }
  }
  return vocab;
}

std::vector<TokenId> tokenize(std::string_view text, const Vocabulary& vocab) {
  std::vector<TokenId> ids;
  for (const std::string& tok : split_surface(text)) {
    ids.push_back(vocab.id_of(tok));
  }
  return ids;
}

std::string detokenize(std::span<const TokenId> ids, const Vocabulary& vocab) {
  std::string out;
  for (TokenId id : ids) {
    const std::string& surface = vocab.surface_of(id);  // throws on bad id
    if (id == kBosId || id == kEosId) continue;
    if (!out.empty()) out += ' ';
    out += surface;
  }
  return out;
}

}  // namespace surplex
