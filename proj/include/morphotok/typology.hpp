#pragma once

// Seeded synthetic corpora standing in for analytic and agglutinative
// languages, and the group-level tests run over them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "morphotok/common.hpp"
#include "morphotok/corpus.hpp"
#include "morphotok/metrics.hpp"
#include "morphotok/stats.hpp"

namespace morphotok {

enum class TypologyKind { analytic, agglutinative };

inline const char* to_string(TypologyKind k) { return k == TypologyKind::analytic ? "analytic" : "agglutinative"; }

inline TypologyKind parse_typology_kind(const std::string& s) {
  if (s == "analytic") return TypologyKind::analytic;
  if (s == "agglutinative") return TypologyKind::agglutinative;
  throw Error("unknown typology kind \"" + s + "\" (expected analytic or agglutinative)");
}

struct TypologyGenConfig {
  TypologyKind kind = TypologyKind::agglutinative;
  std::size_t stem_count = 400;
  std::size_t affix_count = 12;
  std::size_t min_affixes = 1;  // affixes per word, inclusive range
  std::size_t max_affixes = 3;
  std::size_t function_word_count = 30;
  double function_word_rate = 0.05;
  double stem_zipf_exponent = 1.0;
  double function_word_zipf_exponent = 1.2;
  std::uint64_t seed = 0;
  std::size_t word_count = 20000;

  void validate() const {
    if (stem_count == 0 || affix_count == 0 || function_word_count == 0 || word_count == 0)
      throw Error("typology generator: counts must be > 0");
    if (min_affixes > max_affixes) throw Error("typology generator: min_affixes > max_affixes");
    if (!(function_word_rate >= 0.0 && function_word_rate <= 1.0))
      throw Error("typology generator: function_word_rate must lie in [0, 1]");
    if (!(stem_zipf_exponent >= 0.0) || !(function_word_zipf_exponent >= 0.0))
      throw Error("typology generator: Zipf exponents must be >= 0");
  }
};

// Agglutinative: every word is a stem followed by 1..3 affixes from a closed
// set of 12, so affixes recur across many distinct words.
inline TypologyGenConfig default_agglutinative(std::uint64_t seed) {
  TypologyGenConfig c;
  c.kind = TypologyKind::agglutinative;
  c.seed = seed;
  return c;
}

// Analytic: bare stems (occasionally one of 3 affixes) and a 45% share of
// Zipf-distributed standalone function words.
inline TypologyGenConfig default_analytic(std::uint64_t seed) {
  TypologyGenConfig c;
  c.kind = TypologyKind::analytic;
  c.affix_count = 3;
  c.min_affixes = 0;
  c.max_affixes = 1;
  c.function_word_rate = 0.45;
  c.seed = seed;
  return c;
}

inline TypologyGenConfig default_typology_config(TypologyKind kind, std::uint64_t seed) {
  return kind == TypologyKind::analytic ? default_analytic(seed) : default_agglutinative(seed);
}

namespace detail {

inline constexpr std::string_view kConsonants = "ptkbdgmnslrvhj";
inline constexpr std::string_view kVowels = "aeiou";

inline std::string syllable(Rng& rng, bool closed) {
  std::string s;
  s += kConsonants[rng.below(kConsonants.size())];
  s += kVowels[rng.below(kVowels.size())];
  if (closed) s += kConsonants[rng.below(kConsonants.size())];
  return s;
}

// n distinct strings of min_syl..max_syl syllables.
inline std::vector<std::string> distinct_forms(Rng& rng, std::size_t n, std::size_t min_syl, std::size_t max_syl,
                                               std::set<std::string>& taken) {
  std::vector<std::string> out;
  std::size_t attempts = 0;
  while (out.size() < n) {
    if (++attempts > n * 1000 + 10000) throw Error("typology generator: cannot draw enough distinct forms");
    std::string f;
    const auto syl = rng.between(min_syl, max_syl);
    for (std::size_t i = 0; i < syl; ++i) f += syllable(rng, rng.bernoulli(0.3));
    if (taken.insert(f).second) out.push_back(std::move(f));
  }
  return out;
}

// Inverse-CDF sampler over ranks 1..n with weight rank^-s.
class ZipfSampler {
 public:
  ZipfSampler(std::size_t n, double s) : cdf_(n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) cdf_[i] = acc += std::pow(static_cast<double>(i + 1), -s);
    for (auto& c : cdf_) c /= acc;
  }
  std::size_t operator()(Rng& rng) const {
    const double u = rng.unit();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return std::min(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
  }

 private:
  std::vector<double> cdf_;
};

}  // namespace detail

inline WordStream generate_typology_corpus(const TypologyGenConfig& cfg, std::string lang = {}) {
  cfg.validate();
  Rng rng(cfg.seed);
  std::set<std::string> taken;
  const auto stems = detail::distinct_forms(rng, cfg.stem_count, 1, 3, taken);
  const auto affixes = detail::distinct_forms(rng, cfg.affix_count, 1, 1, taken);
  const auto function_words = detail::distinct_forms(rng, cfg.function_word_count, 1, 1, taken);
  const detail::ZipfSampler stem_draw(stems.size(), cfg.stem_zipf_exponent);
  const detail::ZipfSampler fw_draw(function_words.size(), cfg.function_word_zipf_exponent);

  WordStream ws;
  ws.lang = lang.empty() ? std::string(to_string(cfg.kind)) + "-" + std::to_string(cfg.seed) : std::move(lang);
  ws.words.reserve(cfg.word_count);
  for (std::size_t i = 0; i < cfg.word_count; ++i) {
    if (rng.bernoulli(cfg.function_word_rate)) {
      ws.words.push_back(function_words[fw_draw(rng)]);
      continue;
    }
    std::string w = stems[stem_draw(rng)];
    const auto k = rng.between(cfg.min_affixes, cfg.max_affixes);
    for (std::size_t j = 0; j < k; ++j) w += affixes[rng.below(affixes.size())];
    ws.words.push_back(std::move(w));
  }
  return ws;
}

// ---- group-level tests ----

struct GroupedStream {
  WordStream stream;
  std::string group;
};

struct SampledGroupTest {
  std::vector<TestResult> per_point;  // one two-sample test per schedule point
  TestResult final_point;             // the largest sample, Bonferroni-adjusted over all points
  std::vector<TrendCurve> trends;     // input order
};

// Two-sample test (Welch by default) of group_a against group_b at every schedule point of
// precomputed trends; Bonferroni family = number of points.
inline SampledGroupTest group_test_over_points(std::vector<TrendCurve> trends, const std::vector<std::string>& groups,
                                               const std::string& group_a, const std::string& group_b,
                                               TestMethod method = TestMethod::welch_t) {
  if (trends.size() != groups.size()) throw Error("group_test_over_points: one group label per trend required");
  if (trends.empty()) throw Error("group_test_over_points: no languages");
  const std::size_t points = trends.front().values.size();
  for (const auto& t : trends)
    if (t.values.size() != points) throw Error("group_test_over_points: trends differ in length");

  SampledGroupTest out;
  for (std::size_t p = 0; p < points; ++p) {
    std::vector<double> a, b;
    for (std::size_t i = 0; i < trends.size(); ++i) {
      if (groups[i] == group_a) a.push_back(trends[i].values[p]);
      else if (groups[i] == group_b) b.push_back(trends[i].values[p]);
    }
    if (a.empty() || b.empty()) throw Error("sampled_group_test: each group needs at least one language");
    out.per_point.push_back(two_sample_test(a, b, points, method));
  }
  out.final_point = out.per_point.back();
  out.trends = std::move(trends);
  return out;
}

// Repetition trend per language over the schedule, then group_test_over_points.
inline SampledGroupTest sampled_group_test(const std::vector<GroupedStream>& languages, const SampleSchedule& schedule,
                                           const std::string& group_a, const std::string& group_b,
                                           const TrainerConfig& cfg = {}, std::size_t top_k = kDefaultTopN,
                                           const IndexOptions& opts = {}, TestMethod method = TestMethod::welch_t) {
  std::vector<TrendCurve> trends;
  std::vector<std::string> groups;
  for (const auto& l : languages) {
    trends.push_back(repetition_trend(l.stream, schedule, cfg, top_k, opts));
    groups.push_back(l.group);
  }
  return group_test_over_points(std::move(trends), groups, group_a, group_b, method);
}

// Languages as ANOVA groups, each contributing its trend values.
inline TestResult language_anova(const std::vector<TrendCurve>& trends) {
  std::vector<std::vector<double>> groups;
  for (const auto& t : trends) groups.push_back(t.values);
  return one_way_anova(groups);
}

}  // namespace morphotok
