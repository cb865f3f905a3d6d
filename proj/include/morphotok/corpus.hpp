#pragma once

// Corpus ingestion: monolingual sentence-per-line text and verse-aligned
// parallel text, normalization into word streams, and cumulative sampling.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "morphotok/common.hpp"
#include "morphotok/unicode.hpp"

namespace morphotok {

struct Document {
  std::string lang;
  std::string text;
  std::string source_id;

  bool operator==(const Document&) const = default;
};

struct WordStream {
  std::string lang;
  std::vector<std::string> words;

  std::size_t total_words() const noexcept { return words.size(); }
  bool empty() const noexcept { return words.empty(); }

  bool operator==(const WordStream&) const = default;
};

struct NormalizeConfig {
  bool strip_punctuation = true;
  bool strip_symbols = false;
  bool lowercase = false;
};

enum class SampleMode { prefix, shuffle };

struct SampleSchedule {
  std::vector<std::size_t> sizes;
  std::uint64_t seed = 0;
  SampleMode mode = SampleMode::prefix;

  void validate() const {
    if (sizes.empty()) throw Error("sample schedule: sizes must not be empty");
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      if (sizes[i] == 0) throw Error("sample schedule: sizes must be > 0");
      if (i > 0 && sizes[i] <= sizes[i - 1]) throw Error("sample schedule: sizes must be strictly increasing");
    }
  }
};

namespace detail {

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return in;
}

// Reads one LF-terminated line, dropping a trailing CR and a leading BOM on line 1.
inline bool read_line(std::istream& in, std::string& line, std::size_t lineno) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  return true;
}

inline bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return c == ' ' || c == '\t'; });
}

}  // namespace detail

// One Document per non-empty line; source_id is "<path>:<line>".
inline std::vector<Document> load_plaintext(const std::string& path, const std::string& lang) {
  if (lang.empty()) throw Error("load_plaintext: language code must not be empty");
  auto in = detail::open_input(path);
  std::vector<Document> docs;
  std::string line;
  for (std::size_t lineno = 1; detail::read_line(in, line, lineno); ++lineno) {
    if (detail::is_blank(line)) continue;
    if (!unicode::is_valid_utf8(line)) throw ParseError(path, lineno, "invalid UTF-8");
    docs.push_back({lang, line, path + ":" + std::to_string(lineno)});
  }
  if (in.bad()) throw Error("read failure on " + path);
  return docs;
}

// `verse_id<TAB>text` per line. Lines starting with '#' are metadata and skipped.
inline std::vector<Document> load_parallel(const std::string& path, const std::string& lang) {
  if (lang.empty()) throw Error("load_parallel: language code must not be empty");
  auto in = detail::open_input(path);
  std::vector<Document> docs;
  std::string line;
  for (std::size_t lineno = 1; detail::read_line(in, line, lineno); ++lineno) {
    if (detail::is_blank(line) || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(path, lineno, "malformed line: missing TAB after verse id");
    if (tab == 0) throw ParseError(path, lineno, "malformed line: empty verse id");
    if (!unicode::is_valid_utf8(line)) throw ParseError(path, lineno, "invalid UTF-8");
    docs.push_back({lang, line.substr(tab + 1), line.substr(0, tab)});
  }
  if (in.bad()) throw Error("read failure on " + path);
  return docs;
}

struct AlignedCorpora {
  std::vector<std::vector<Document>> corpora;  // same order as the input
  std::size_t dropped = 0;                     // documents removed across all inputs
};

// Keeps the verses present in every corpus, in the order of the first corpus.
inline AlignedCorpora align_verses(const std::vector<std::vector<Document>>& corpora) {
  AlignedCorpora out;
  out.corpora.resize(corpora.size());
  if (corpora.empty()) return out;

  std::vector<std::unordered_map<std::string, const Document*>> by_id(corpora.size());
  for (std::size_t c = 0; c < corpora.size(); ++c) {
    for (const auto& d : corpora[c]) {
      if (!by_id[c].emplace(d.source_id, &d).second)
        throw Error("align_verses: duplicate verse id " + d.source_id + " in " + d.lang);
    }
  }
  for (const auto& d : corpora.front()) {
    const bool shared = std::all_of(by_id.begin() + 1, by_id.end(),
                                    [&](const auto& m) { return m.count(d.source_id) > 0; });
    if (!shared) continue;
    for (std::size_t c = 0; c < corpora.size(); ++c) out.corpora[c].push_back(*by_id[c].at(d.source_id));
  }
  std::size_t total = 0;
  for (const auto& c : corpora) total += c.size();
  out.dropped = total - out.corpora.front().size() * corpora.size();
  return out;
}

// NFC, optional punctuation/symbol stripping and lowercasing, then split on whitespace.
inline WordStream normalize_and_split(const Document& doc, const NormalizeConfig& cfg = {}) {
  WordStream ws;
  ws.lang = doc.lang;
  std::string text = unicode::nfc(doc.text);
  if (cfg.lowercase) text = unicode::to_lower(text);

  std::string word;
  auto flush = [&] {
    if (!word.empty()) ws.words.push_back(std::move(word));
    word.clear();
  };
  unicode::for_each_code_point(text, [&](UChar32 c, std::string_view bytes) {
    if (unicode::is_white_space(c)) {
      flush();
    } else if ((cfg.strip_punctuation && unicode::is_punctuation(c)) || (cfg.strip_symbols && unicode::is_symbol(c))) {
      // dropped; does not split the surrounding run
    } else {
      word.append(bytes);
    }
  });
  flush();
  // Stripping can expose combining marks to new neighbours.
  for (auto& w : ws.words) w = unicode::nfc(w);
  return ws;
}

inline WordStream normalize_all(const std::vector<Document>& docs, const std::string& lang,
                                const NormalizeConfig& cfg = {}) {
  WordStream out;
  out.lang = lang;
  for (const auto& d : docs) {
    auto ws = normalize_and_split(d, cfg);
    out.words.insert(out.words.end(), std::make_move_iterator(ws.words.begin()),
                     std::make_move_iterator(ws.words.end()));
  }
  return out;
}

// Nested samples of the stream: prefixes of either the stream itself or a
// seeded permutation of it.
inline std::vector<WordStream> cumulative_samples(const WordStream& stream, const SampleSchedule& schedule) {
  schedule.validate();
  if (schedule.sizes.back() > stream.total_words())
    throw Error("cumulative_samples: schedule size " + std::to_string(schedule.sizes.back()) +
                " exceeds stream length " + std::to_string(stream.total_words()));

  std::vector<std::size_t> order(stream.total_words());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (schedule.mode == SampleMode::shuffle) {
    Rng rng(schedule.seed);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  }

  std::vector<WordStream> out;
  out.reserve(schedule.sizes.size());
  for (std::size_t size : schedule.sizes) {
    WordStream s;
    s.lang = stream.lang;
    s.words.reserve(size);
    for (std::size_t i = 0; i < size; ++i) s.words.push_back(stream.words[order[i]]);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace morphotok
