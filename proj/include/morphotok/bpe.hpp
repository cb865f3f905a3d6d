#pragma once

// Byte-pair-encoding over word streams: greedy training, rank-ordered
// encoding, the compression-power ledger, and the merges.txt / vocab.tsv
// tokenizer files.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "morphotok/common.hpp"
#include "morphotok/corpus.hpp"
#include "morphotok/unicode.hpp"

namespace morphotok {

inline constexpr std::string_view kMergesHeader = "#morphotok-merges v1";

struct MergeRule {
  std::string left;
  std::string right;
  std::size_t rank = 0;
  std::int64_t pair_count_at_merge = 0;  // 0 when loaded from disk

  std::string merged() const { return left + right; }
  bool operator==(const MergeRule&) const = default;
};

struct MergeTable {
  std::vector<MergeRule> rules;
  std::vector<std::string> alphabet;        // sorted, unique
  std::vector<std::string> vocab;           // id order: alphabet, then new merged tokens by rank
  std::vector<std::int64_t> gain_ledger;    // cumulative G after each merge; empty when loaded from disk

  bool operator==(const MergeTable&) const = default;

  // Equality of what the tokenizer files carry: rules, ranks, alphabet and vocab ids.
  bool same_model(const MergeTable& other) const {
    if (alphabet != other.alphabet || vocab != other.vocab || rules.size() != other.rules.size()) return false;
    for (std::size_t i = 0; i < rules.size(); ++i) {
      const auto &a = rules[i], &b = other.rules[i];
      if (a.left != b.left || a.right != b.right || a.rank != b.rank) return false;
    }
    return true;
  }

  // Builds vocab from an alphabet and a rule sequence; ranks are reassigned 0..n-1.
  static MergeTable from_rules(std::vector<std::string> alphabet, std::vector<MergeRule> rules) {
    MergeTable t;
    std::sort(alphabet.begin(), alphabet.end());
    alphabet.erase(std::unique(alphabet.begin(), alphabet.end()), alphabet.end());
    t.alphabet = std::move(alphabet);
    t.rules = std::move(rules);
    for (std::size_t i = 0; i < t.rules.size(); ++i) t.rules[i].rank = i;
    t.rebuild_vocab();
    return t;
  }

  // The table truncated to its first n rules.
  MergeTable prefix(std::size_t n) const {
    if (n > rules.size()) throw Error("prefix length " + std::to_string(n) + " exceeds " + std::to_string(rules.size()) + " rules");
    MergeTable t;
    t.alphabet = alphabet;
    t.rules.assign(rules.begin(), rules.begin() + static_cast<std::ptrdiff_t>(n));
    if (!gain_ledger.empty()) t.gain_ledger.assign(gain_ledger.begin(), gain_ledger.begin() + static_cast<std::ptrdiff_t>(n));
    t.rebuild_vocab();
    return t;
  }

  std::unordered_map<std::string, std::uint32_t> token_ids() const {
    std::unordered_map<std::string, std::uint32_t> ids;
    for (std::size_t i = 0; i < vocab.size(); ++i) ids.emplace(vocab[i], static_cast<std::uint32_t>(i));
    return ids;
  }

  void rebuild_vocab() {
    vocab = alphabet;
    std::unordered_set<std::string> seen(vocab.begin(), vocab.end());
    for (const auto& r : rules) {
      auto m = r.merged();
      if (seen.insert(m).second) vocab.push_back(std::move(m));
    }
  }
};

enum class TieBreak { lexicographic };

struct TrainerConfig {
  std::optional<std::size_t> merge_limit = 500;
  std::optional<std::size_t> vocab_limit;
  TieBreak tie_break = TieBreak::lexicographic;
  bool intra_word_only = true;

  void validate() const {
    if (!merge_limit && !vocab_limit) throw Error("trainer: one of merge_limit or vocab_limit must be set");
    if (merge_limit && *merge_limit == 0) throw Error("trainer: merge_limit must be > 0");
    if (vocab_limit && *vocab_limit == 0) throw Error("trainer: vocab_limit must be > 0");
    // merges.txt separates left and right with a space, so tokens may never span words.
    if (!intra_word_only) throw Error("trainer: intra_word_only=false is not supported");
  }
};

// Merges need at least this many occurrences of the pair.
inline constexpr std::int64_t kMinPairCount = 2;

inline std::map<std::string, std::int64_t> count_words(const WordStream& stream) {
  std::map<std::string, std::int64_t> counts;
  for (const auto& w : stream.words) ++counts[w];
  return counts;
}

inline std::int64_t symbol_count(const WordStream& stream) {
  std::int64_t n = 0;
  for (const auto& w : stream.words) n += static_cast<std::int64_t>(unicode::code_point_count(w));
  return n;
}

namespace detail {

using SymbolId = std::uint32_t;
using PairKey = std::uint64_t;

inline PairKey pair_key(SymbolId l, SymbolId r) { return (static_cast<PairKey>(l) << 32) | r; }
inline SymbolId pair_left(PairKey k) { return static_cast<SymbolId>(k >> 32); }
inline SymbolId pair_right(PairKey k) { return static_cast<SymbolId>(k & 0xffffffffu); }

class SymbolTable {
 public:
  SymbolId intern(const std::string& s) {
    auto [it, inserted] = ids_.emplace(s, static_cast<SymbolId>(strs_.size()));
    if (inserted) strs_.push_back(s);
    return it->second;
  }
  std::optional<SymbolId> find(const std::string& s) const {
    auto it = ids_.find(s);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }
  const std::string& str(SymbolId id) const { return strs_[id]; }
  std::size_t size() const { return strs_.size(); }

 private:
  std::vector<std::string> strs_;
  std::unordered_map<std::string, SymbolId> ids_;
};

// Replaces non-overlapping (l, r) occurrences left to right. Returns true if any merged.
inline bool apply_merge(std::vector<SymbolId>& syms, SymbolId l, SymbolId r, SymbolId merged) {
  std::size_t out = 0;
  bool changed = false;
  for (std::size_t i = 0; i < syms.size();) {
    if (i + 1 < syms.size() && syms[i] == l && syms[i + 1] == r) {
      syms[out++] = merged;
      i += 2;
      changed = true;
    } else {
      syms[out++] = syms[i++];
    }
  }
  syms.resize(out);
  return changed;
}

struct WordState {
  std::vector<SymbolId> syms;
  std::int64_t count = 0;
};

class PairTrainer {
 public:
  explicit PairTrainer(const std::map<std::string, std::int64_t>& word_counts) {
    std::set<std::string> alphabet;
    for (const auto& [word, count] : word_counts) {
      WordState ws;
      ws.count = count;
      unicode::for_each_code_point(word, [&](UChar32, std::string_view cp) {
        std::string s(cp);
        alphabet.insert(s);
        ws.syms.push_back(symbols_.intern(s));
      });
      symbols_total_ += static_cast<std::int64_t>(ws.syms.size()) * count;
      words_.push_back(std::move(ws));
    }
    alphabet_.assign(alphabet.begin(), alphabet.end());
    vocab_.insert(alphabet.begin(), alphabet.end());
    for (std::size_t w = 0; w < words_.size(); ++w) add_pairs(w);
  }

  MergeTable run(const TrainerConfig& cfg) {
    MergeTable table;
    table.alphabet = alphabet_;
    std::int64_t gain = 0;
    while (true) {
      if (cfg.merge_limit && table.rules.size() >= *cfg.merge_limit) break;
      if (cfg.vocab_limit && vocab_.size() >= *cfg.vocab_limit) break;
      auto best = best_pair();
      if (!best || best->second < kMinPairCount) break;

      const SymbolId l = pair_left(best->first), r = pair_right(best->first);
      MergeRule rule{symbols_.str(l), symbols_.str(r), table.rules.size(), best->second};
      const SymbolId merged = symbols_.intern(rule.merged());
      vocab_.insert(rule.merged());
      gain += merge(best->first, l, r, merged);
      table.rules.push_back(std::move(rule));
      table.gain_ledger.push_back(gain);
    }
    table.rebuild_vocab();
    return table;
  }

  std::int64_t symbols_total() const { return symbols_total_; }

 private:
  // Maximal count; ties go to the lexicographically smallest (left, right).
  std::optional<std::pair<PairKey, std::int64_t>> best_pair() const {
    std::optional<std::pair<PairKey, std::int64_t>> best;
    for (const auto& [key, count] : pair_counts_) {
      if (count <= 0) continue;
      if (!best || count > best->second || (count == best->second && lex_less(key, best->first))) best = {key, count};
    }
    return best;
  }

  bool lex_less(PairKey a, PairKey b) const {
    const auto& al = symbols_.str(pair_left(a));
    const auto& bl = symbols_.str(pair_left(b));
    if (al != bl) return al < bl;
    return symbols_.str(pair_right(a)) < symbols_.str(pair_right(b));
  }

  void add_pairs(std::size_t w) {
    const auto& ws = words_[w];
    for (std::size_t i = 0; i + 1 < ws.syms.size(); ++i) {
      const PairKey k = pair_key(ws.syms[i], ws.syms[i + 1]);
      pair_counts_[k] += ws.count;
      pair_words_[k].push_back(static_cast<std::uint32_t>(w));
    }
  }

  void remove_pairs(std::size_t w) {
    const auto& ws = words_[w];
    for (std::size_t i = 0; i + 1 < ws.syms.size(); ++i) {
      auto it = pair_counts_.find(pair_key(ws.syms[i], ws.syms[i + 1]));
      it->second -= ws.count;
      if (it->second == 0) pair_counts_.erase(it);
    }
  }

  // Applies the merge to every word holding the pair; returns the symbol-count reduction.
  std::int64_t merge(PairKey key, SymbolId l, SymbolId r, SymbolId merged) {
    auto node = pair_words_.extract(key);
    std::vector<std::uint32_t> candidates = std::move(node.mapped());
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    std::int64_t reduction = 0;
    for (std::uint32_t w : candidates) {
      auto& ws = words_[w];
      bool present = false;
      for (std::size_t i = 0; i + 1 < ws.syms.size() && !present; ++i) present = ws.syms[i] == l && ws.syms[i + 1] == r;
      if (!present) continue;  // stale index entry
      remove_pairs(w);
      const std::size_t before = ws.syms.size();
      apply_merge(ws.syms, l, r, merged);
      reduction += static_cast<std::int64_t>(before - ws.syms.size()) * ws.count;
      add_pairs(w);
    }
    return reduction;
  }

  SymbolTable symbols_;
  std::vector<WordState> words_;
  std::vector<std::string> alphabet_;
  std::unordered_set<std::string> vocab_;
  std::unordered_map<PairKey, std::int64_t> pair_counts_;
  std::unordered_map<PairKey, std::vector<std::uint32_t>> pair_words_;
  std::int64_t symbols_total_ = 0;
};

}  // namespace detail

// Greedy BPE: repeatedly merge the most frequent adjacent pair (weighted by
// word frequency) until a limit is hit or no pair occurs at least twice.
inline MergeTable train(const WordStream& stream, const TrainerConfig& cfg = {}) {
  cfg.validate();
  if (stream.empty()) throw Error("train: empty word stream");
  detail::PairTrainer trainer(count_words(stream));
  return trainer.run(cfg);
}

struct EncodeOptions {
  bool pass_through_unknown = true;
};

struct Encoding {
  std::vector<std::string> tokens;
  std::vector<std::size_t> word_offsets{0};  // tokens of word i are [offsets[i], offsets[i+1])

  std::size_t token_count() const noexcept { return tokens.size(); }
  std::size_t word_count() const noexcept { return word_offsets.size() - 1; }
};

// Applies a table's rules in rank order. Immutable after construction, so a
// single Encoder may be shared across threads.
class Encoder {
 public:
  explicit Encoder(const MergeTable& table, EncodeOptions opts = {},
                   std::size_t rule_limit = std::numeric_limits<std::size_t>::max())
      : opts_(opts) {
    for (const auto& a : table.alphabet) symbols_.intern(a);
    alphabet_size_ = symbols_.size();
    const std::size_t n = std::min(rule_limit, table.rules.size());
    for (std::size_t i = 0; i < n; ++i) {
      const auto& r = table.rules[i];
      const auto l = symbols_.intern(r.left);
      const auto rt = symbols_.intern(r.right);
      const auto m = symbols_.intern(r.merged());
      rule_of_[detail::pair_key(l, rt)].push_back(Rule{i, m});  // ranks ascend
    }
  }

  std::vector<std::string> encode_word(std::string_view word) const {
    std::vector<std::string> unknown;
    auto ids = initial_ids(word, unknown);
    apply_rules(ids);
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (auto id : ids) out.push_back(id >= kUnknownBase ? unknown[id - kUnknownBase] : symbols_.str(id));
    return out;
  }

 private:
  static constexpr detail::SymbolId kUnknownBase = 0x80000000u;

  struct Rule {
    std::size_t rank;
    detail::SymbolId merged;
  };

  std::vector<detail::SymbolId> initial_ids(std::string_view word, std::vector<std::string>& unknown) const {
    std::vector<detail::SymbolId> ids;
    unicode::for_each_code_point(word, [&](UChar32, std::string_view cp) {
      std::string s(cp);
      auto id = symbols_.find(s);
      if (id && *id < alphabet_size_) {
        ids.push_back(*id);
      } else if (opts_.pass_through_unknown) {
        ids.push_back(kUnknownBase + static_cast<detail::SymbolId>(unknown.size()));
        unknown.push_back(std::move(s));
      } else {
        throw Error("encode: symbol \"" + s + "\" is not in the tokenizer alphabet");
      }
    });
    return ids;
  }

  // Equivalent to visiting every rule once in rank order: jump to the
  // lowest-ranked applicable rule above the last one applied.
  void apply_rules(std::vector<detail::SymbolId>& ids) const {
    std::size_t floor = 0;  // rules with rank < floor are spent
    while (ids.size() > 1) {
      const Rule* next = nullptr;
      detail::PairKey next_key = 0;
      for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
        auto it = rule_of_.find(detail::pair_key(ids[i], ids[i + 1]));
        if (it == rule_of_.end()) continue;
        // The same pair can be re-learned after an identical token is rebuilt by another split.
        auto r = std::find_if(it->second.begin(), it->second.end(), [&](const Rule& x) { return x.rank >= floor; });
        if (r == it->second.end()) continue;
        if (!next || r->rank < next->rank) {
          next = &*r;
          next_key = it->first;
        }
      }
      if (!next) break;
      detail::apply_merge(ids, detail::pair_left(next_key), detail::pair_right(next_key), next->merged);
      floor = next->rank + 1;
    }
  }

  EncodeOptions opts_;
  detail::SymbolTable symbols_;
  std::size_t alphabet_size_ = 0;
  std::unordered_map<detail::PairKey, std::vector<Rule>> rule_of_;
};

inline Encoding encode(const WordStream& stream, const Encoder& encoder) {
  Encoding enc;
  enc.word_offsets.reserve(stream.total_words() + 1);
  std::unordered_map<std::string, std::vector<std::string>> cache;
  for (const auto& w : stream.words) {
    auto it = cache.find(w);
    if (it == cache.end()) it = cache.emplace(w, encoder.encode_word(w)).first;
    enc.tokens.insert(enc.tokens.end(), it->second.begin(), it->second.end());
    enc.word_offsets.push_back(enc.tokens.size());
  }
  return enc;
}

inline Encoding encode(const WordStream& stream, const MergeTable& table, EncodeOptions opts = {}) {
  return encode(stream, Encoder(table, opts));
}

struct SegmentedWord {
  std::string word;
  std::vector<std::string> tokens;
};

inline std::vector<SegmentedWord> segment_words(const WordStream& stream, const Encoding& enc) {
  if (enc.word_count() != stream.total_words()) throw Error("segment_words: encoding does not match stream");
  std::vector<SegmentedWord> out;
  out.reserve(stream.total_words());
  for (std::size_t i = 0; i < stream.total_words(); ++i) {
    out.push_back({stream.words[i], {enc.tokens.begin() + static_cast<std::ptrdiff_t>(enc.word_offsets[i]),
                                     enc.tokens.begin() + static_cast<std::ptrdiff_t>(enc.word_offsets[i + 1])}});
  }
  return out;
}

// G after every prefix of the table: result[k] = symbols before merging minus
// symbols after the first k rules; result[0] == 0. Applies rules one by one.
inline std::vector<std::int64_t> compression_powers(const WordStream& stream, const MergeTable& table) {
  detail::SymbolTable symbols;
  std::vector<detail::WordState> words;
  for (const auto& [word, count] : count_words(stream)) {
    detail::WordState ws;
    ws.count = count;
    unicode::for_each_code_point(word, [&](UChar32, std::string_view cp) { ws.syms.push_back(symbols.intern(std::string(cp))); });
    words.push_back(std::move(ws));
  }
  std::vector<std::int64_t> powers{0};
  powers.reserve(table.rules.size() + 1);
  std::int64_t gain = 0;
  for (const auto& rule : table.rules) {
    const auto l = symbols.find(rule.left);
    const auto r = symbols.find(rule.right);
    if (l && r) {
      const auto m = symbols.intern(rule.merged());
      for (auto& ws : words) {
        const std::size_t before = ws.syms.size();
        if (detail::apply_merge(ws.syms, *l, *r, m)) gain += static_cast<std::int64_t>(before - ws.syms.size()) * ws.count;
      }
    }
    powers.push_back(gain);
  }
  return powers;
}

// G of the first prefix_len rules on this stream.
inline std::int64_t compression_power(const WordStream& stream, const MergeTable& table, std::size_t prefix_len) {
  if (prefix_len > table.rules.size())
    throw Error("compression_power: prefix " + std::to_string(prefix_len) + " exceeds " +
                std::to_string(table.rules.size()) + " rules");
  if (prefix_len == 0) return 0;
  const auto enc = encode(stream, Encoder(table, {}, prefix_len));
  return symbol_count(stream) - static_cast<std::int64_t>(enc.token_count());
}

struct IncrementCheck {
  std::size_t rank;
  bool holds;
  bool operator==(const IncrementCheck&) const = default;
};

// Per-merge gains g[k] = G(k+1) - G(k); reports g[k] <= g[k+1] for each k.
inline std::vector<IncrementCheck> increment_relation(const std::vector<std::int64_t>& gains) {
  if (gains.size() < 2) throw Error("increment relation needs at least 2 merges");
  std::vector<IncrementCheck> out;
  for (std::size_t k = 0; k + 1 < gains.size(); ++k) out.push_back({k, gains[k] <= gains[k + 1]});
  return out;
}

inline std::vector<IncrementCheck> check_increment_relation(const WordStream& stream, const MergeTable& table) {
  if (table.rules.size() < 2) throw Error("check_increment_relation: table has fewer than 2 merges");
  const auto powers = compression_powers(stream, table);
  std::vector<std::int64_t> gains;
  for (std::size_t k = 0; k + 1 < powers.size(); ++k) gains.push_back(powers[k + 1] - powers[k]);
  return increment_relation(gains);
}

inline double fraction_holding(const std::vector<IncrementCheck>& checks) {
  if (checks.empty()) return 0.0;
  const auto n = std::count_if(checks.begin(), checks.end(), [](const auto& c) { return c.holds; });
  return static_cast<double>(n) / static_cast<double>(checks.size());
}

// ---- tokenizer files ----

inline void write_merges(std::ostream& out, const MergeTable& table) {
  out << kMergesHeader << '\n';
  for (const auto& r : table.rules) out << r.left << ' ' << r.right << '\n';
}

inline void write_vocab(std::ostream& out, const MergeTable& table) {
  for (std::size_t i = 0; i < table.vocab.size(); ++i) out << table.vocab[i] << '\t' << i << '\n';
}

inline void export_tokenizer(const MergeTable& table, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, writer] : {std::pair{"merges.txt", &write_merges}, std::pair{"vocab.tsv", &write_vocab}}) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw Error("cannot write " + (dir / name).string());
    writer(out, table);
    if (!out) throw Error("write failure on " + (dir / name).string());
  }
}

inline MergeTable import_tokenizer(const std::filesystem::path& dir) {
  const auto merges_path = (dir / "merges.txt").string();
  const auto vocab_path = (dir / "vocab.tsv").string();

  std::vector<MergeRule> rules;
  {
    auto in = detail::open_input(merges_path);
    std::string line;
    std::size_t lineno = 1;
    if (!detail::read_line(in, line, lineno) || line != kMergesHeader)
      throw ParseError(merges_path, 1, "expected header \"" + std::string(kMergesHeader) + "\"");
    while (detail::read_line(in, line, ++lineno)) {
      const auto sp = line.find(' ');
      if (sp == std::string::npos || sp == 0 || sp + 1 == line.size() || line.find(' ', sp + 1) != std::string::npos)
        throw ParseError(merges_path, lineno, "expected \"<left> <right>\"");
      if (!unicode::is_valid_utf8(line)) throw ParseError(merges_path, lineno, "invalid UTF-8");
      rules.push_back({line.substr(0, sp), line.substr(sp + 1), rules.size(), 0});
    }
  }

  std::vector<std::string> vocab;
  {
    auto in = detail::open_input(vocab_path);
    std::string line;
    for (std::size_t lineno = 1; detail::read_line(in, line, lineno); ++lineno) {
      const auto tab = line.find('\t');
      if (tab == std::string::npos || tab == 0) throw ParseError(vocab_path, lineno, "expected \"<token>\\t<id>\"");
      const auto id_text = line.substr(tab + 1);
      if (id_text.empty() || id_text.find_first_not_of("0123456789") != std::string::npos || std::stoull(id_text) != vocab.size())
        throw ParseError(vocab_path, lineno, "ids must be dense and start at 0");
      vocab.push_back(line.substr(0, tab));
    }
  }

  // Alphabet is everything before the merged tokens.
  std::vector<std::string> merged;
  {
    std::unordered_set<std::string> seen;
    for (const auto& r : rules)
      if (seen.insert(r.merged()).second) merged.push_back(r.merged());
  }
  if (merged.size() > vocab.size()) throw Error(vocab_path + ": fewer tokens than merges imply");
  const std::size_t alpha_n = vocab.size() - merged.size();
  std::vector<std::string> alphabet(vocab.begin(), vocab.begin() + static_cast<std::ptrdiff_t>(alpha_n));
  for (std::size_t i = 0; i < merged.size(); ++i)
    if (vocab[alpha_n + i] != merged[i])
      throw ParseError(vocab_path, alpha_n + i + 1, "token does not match merge sequence (expected \"" + merged[i] + "\")");
  if (!std::is_sorted(alphabet.begin(), alphabet.end()) ||
      std::adjacent_find(alphabet.begin(), alphabet.end()) != alphabet.end())
    throw Error(vocab_path + ": alphabet entries must be sorted and unique");

  auto table = MergeTable::from_rules(std::move(alphabet), std::move(rules));
  std::unordered_set<std::string> known(table.alphabet.begin(), table.alphabet.end());
  for (std::size_t i = 0; i < table.rules.size(); ++i) {
    const auto& r = table.rules[i];
    if (!known.count(r.left) || !known.count(r.right))
      throw ParseError(merges_path, i + 2, "merge uses a token not produced earlier");
    known.insert(r.merged());
  }
  return table;
}

// One line per document: space-separated decimal token ids.
inline void write_token_ids(std::ostream& out, const std::vector<WordStream>& documents, const Encoder& encoder,
                            const MergeTable& table) {
  const auto ids = table.token_ids();
  for (const auto& doc : documents) {
    const auto enc = encode(doc, encoder);
    for (std::size_t i = 0; i < enc.tokens.size(); ++i) {
      auto it = ids.find(enc.tokens[i]);
      if (it == ids.end()) throw Error("token \"" + enc.tokens[i] + "\" has no vocabulary id");
      if (i) out << ' ';
      out << it->second;
    }
    out << '\n';
  }
}

}  // namespace morphotok
