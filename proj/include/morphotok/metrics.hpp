#pragma once

// Subword productivity, rank-frequency curves, decay dominance, and the
// subword-repetition trend over growing samples.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "morphotok/bpe.hpp"
#include "morphotok/common.hpp"
#include "morphotok/corpus.hpp"

namespace morphotok {

struct IndexOptions {
  std::size_t min_subword_len = 1;  // in code points; 2 keeps merged tokens only
};

struct SubwordEntry {
  std::set<std::string> words;       // distinct surface words containing the subword
  std::int64_t occurrence_count = 0; // token frequency
};

struct SubwordIndex {
  std::map<std::string, SubwordEntry> entries;

  std::size_t subword_count() const noexcept { return entries.size(); }

  std::int64_t total_occurrences() const {
    std::int64_t n = 0;
    for (const auto& [s, e] : entries) n += e.occurrence_count;
    return n;
  }
};

inline SubwordIndex build_index(std::span<const SegmentedWord> words, const IndexOptions& opts = {}) {
  SubwordIndex index;
  for (const auto& sw : words) {
    for (const auto& tok : sw.tokens) {
      if (opts.min_subword_len > 1 && unicode::code_point_count(tok) < opts.min_subword_len) continue;
      auto& e = index.entries[tok];
      e.words.insert(sw.word);
      ++e.occurrence_count;
    }
  }
  return index;
}

// Mean number of distinct words each subword occurs in.
inline double productivity(const SubwordIndex& index) {
  if (index.entries.empty()) throw Error("productivity: empty subword index");
  std::uint64_t total = 0;
  for (const auto& [s, e] : index.entries) total += e.words.size();
  return static_cast<double>(total) / static_cast<double>(index.subword_count());
}

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw Error("mean of empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

// Sample (n-1) standard deviation; 0 for a single value.
inline double sample_stddev(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

struct ProductivityResult {
  std::string lang;
  std::map<std::size_t, double> per_round;  // merge count -> rho
  double mean_rho = 0.0;
  double std_rho = 0.0;
};

inline const std::vector<std::size_t> kDefaultMergeRounds{300, 400, 500};

// rho after each merge count. Greedy training is prefix-stable, so one table
// trained to the largest count is truncated for the smaller ones.
inline ProductivityResult productivity_rounds(const WordStream& stream,
                                              const std::vector<std::size_t>& merge_counts = kDefaultMergeRounds,
                                              TrainerConfig cfg = {}, const IndexOptions& opts = {}) {
  if (merge_counts.empty()) throw Error("productivity_rounds: no merge counts given");
  for (auto m : merge_counts)
    if (m == 0) throw Error("productivity_rounds: merge counts must be > 0");
  cfg.merge_limit = *std::max_element(merge_counts.begin(), merge_counts.end());
  const MergeTable full = train(stream, cfg);

  ProductivityResult result;
  result.lang = stream.lang;
  std::vector<double> values;
  for (auto m : merge_counts) {
    const auto table = full.prefix(std::min(m, full.rules.size()));
    const auto segmented = segment_words(stream, encode(stream, table));
    const double rho = productivity(build_index(segmented, opts));
    result.per_round[m] = rho;
    values.push_back(rho);
  }
  result.mean_rho = mean(values);
  result.std_rho = sample_stddev(values);
  return result;
}

struct FrequencyCurve {
  std::string lang;
  std::vector<double> freqs;  // relative, non-increasing
  std::int64_t total_tokens = 0;
};

inline constexpr std::size_t kDefaultTopN = 100;

inline std::vector<std::int64_t> sorted_counts(const SubwordIndex& index) {
  std::vector<std::int64_t> counts;
  counts.reserve(index.entries.size());
  for (const auto& [s, e] : index.entries) counts.push_back(e.occurrence_count);
  std::sort(counts.begin(), counts.end(), std::greater<>());
  return counts;
}

inline FrequencyCurve frequency_curve(const SubwordIndex& index, std::size_t top_n = kDefaultTopN,
                                      std::string lang = {}) {
  if (top_n < 2) throw Error("frequency_curve: top_n must be >= 2");
  if (index.subword_count() < 2) throw Error("frequency_curve: index has fewer than 2 subwords");
  FrequencyCurve curve;
  curve.lang = std::move(lang);
  curve.total_tokens = index.total_occurrences();
  auto counts = sorted_counts(index);
  counts.resize(std::min(top_n, counts.size()));
  for (auto c : counts) curve.freqs.push_back(static_cast<double>(c) / static_cast<double>(curve.total_tokens));
  return curve;
}

struct DecayDominance {
  double fraction_holding = 0.0;
  std::vector<bool> per_k;  // per_k[k-1] for rank k = 1..k_max
};

// For each rank k: does curve a drop faster from k to k+1 than curve b does?
inline DecayDominance decay_dominance(const FrequencyCurve& a, const FrequencyCurve& b, std::size_t k_max) {
  if (k_max == 0) throw Error("decay_dominance: k_max must be >= 1");
  if (a.freqs.size() < k_max + 1 || b.freqs.size() < k_max + 1)
    throw Error("decay_dominance: curves need at least k_max+1 = " + std::to_string(k_max + 1) + " points");
  DecayDominance out;
  std::size_t held = 0;
  for (std::size_t k = 0; k < k_max; ++k) {
    const bool holds = (a.freqs[k] - a.freqs[k + 1]) > (b.freqs[k] - b.freqs[k + 1]);
    out.per_k.push_back(holds);
    held += holds;
  }
  out.fraction_holding = static_cast<double>(held) / static_cast<double>(k_max);
  return out;
}

struct TrendCurve {
  std::string lang;
  std::vector<std::size_t> sample_sizes;
  std::vector<double> values;
};

// Subword-repetition statistic: mean relative frequency of the top_k most
// frequent subwords (fewer when the index is smaller).
inline double repetition_statistic(const SubwordIndex& index, std::size_t top_k) {
  if (index.entries.empty()) throw Error("repetition_statistic: empty subword index");
  if (top_k == 0) throw Error("repetition_statistic: top_k must be >= 1");
  const auto counts = sorted_counts(index);
  const std::size_t k = std::min(top_k, counts.size());
  const auto top = std::accumulate(counts.begin(), counts.begin() + static_cast<std::ptrdiff_t>(k), std::int64_t{0});
  return static_cast<double>(top) / static_cast<double>(index.total_occurrences()) / static_cast<double>(k);
}

inline TrendCurve repetition_trend(const WordStream& stream, const SampleSchedule& schedule,
                                   const TrainerConfig& cfg = {}, std::size_t top_k = kDefaultTopN,
                                   const IndexOptions& opts = {}) {
  TrendCurve trend;
  trend.lang = stream.lang;
  for (const auto& sample : cumulative_samples(stream, schedule)) {
    const auto table = train(sample, cfg);
    const auto segmented = segment_words(sample, encode(sample, table));
    trend.sample_sizes.push_back(sample.total_words());
    trend.values.push_back(repetition_statistic(build_index(segmented, opts), top_k));
  }
  return trend;
}

}  // namespace morphotok
