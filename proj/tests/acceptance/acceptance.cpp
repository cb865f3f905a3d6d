// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "morphotok/morphotok.hpp"
#include "support/bpe_oracle.hpp"
#include "support/stats_reference.hpp"

namespace {

using namespace morphotok;

constexpr double kOracleBudgetSeconds = 10.0;
constexpr double kMonotonicityBudgetSeconds = 30.0;
constexpr double kTypologyBudgetSeconds = 120.0;
constexpr double kExponentTolerance = 1e-9;
constexpr double kRSquaredTolerance = 1e-12;
constexpr double kPValueTolerance = 1e-6;
constexpr double kFEqualsTSquaredTolerance = 1e-9;
constexpr double kSignificance = 0.05;
constexpr double kPbcSlopeTolerance = 0.15;
constexpr double kPbcEnglishSlope = -1.03;
constexpr double kPbcBasqueSlope = -0.70;

struct Outcome {
  enum { pass, fail, skip } status;
  std::string detail;
};

int failures = 0;

void criterion(const char* name, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {Outcome::fail, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const char* tag = o.status == Outcome::pass ? "PASS" : o.status == Outcome::fail ? "FAIL" : "SKIP";
  if (o.status == Outcome::fail) ++failures;
  std::printf("%s  %-34s %s [%.2fs]\n", tag, name, o.detail.c_str(), secs);
  std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

// Corpus over the first `alphabet` letters of "abcd" with at most `max_symbols` symbols in total.
std::vector<std::string> small_corpus(std::mt19937_64& rng, std::size_t max_symbols) {
  const std::size_t alphabet = 1 + rng() % 4;
  std::size_t budget = 2 + rng() % (max_symbols - 1);
  std::vector<std::string> words;
  while (budget > 0) {
    const std::size_t len = 1 + rng() % budget;
    std::string w;
    for (std::size_t i = 0; i < len; ++i) w += static_cast<char>('a' + rng() % alphabet);
    words.push_back(w);
    budget -= len;
  }
  return words;
}

Outcome oracle_equivalence() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240501);
  std::size_t corpora = 0, merges = 0, mismatched = 0;
  for (; corpora < 500; ++corpora) {
    const auto words = small_corpus(rng, 12);
    TrainerConfig cfg;
    cfg.merge_limit.reset();
    cfg.vocab_limit = 1000;
    const auto table = train(WordStream{"x", words}, cfg);
    const auto expected = testing::oracle_train(words, 1000);
    bool same = table.rules.size() == expected.size();
    for (std::size_t i = 0; same && i < expected.size(); ++i)
      same = table.rules[i].left == expected[i].left && table.rules[i].right == expected[i].right &&
             table.rules[i].pair_count_at_merge == expected[i].count;
    mismatched += !same;
    merges += expected.size();
  }
  const double secs = seconds_since(start);
  std::ostringstream d;
  d << corpora << " corpora, " << merges << " merges, " << mismatched << " mismatched corpora, " << secs << "s";
  return {mismatched == 0 && secs < kOracleBudgetSeconds ? Outcome::pass : Outcome::fail, d.str()};
}

Outcome monotonicity() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(7001);
  std::size_t prefixes = 0, violations = 0;
  for (int c = 0; c < 1000; ++c) {
    std::vector<std::string> words(1 + rng() % 30);
    for (auto& w : words)
      for (std::size_t i = 0, n = 1 + rng() % 8; i < n; ++i) w += static_cast<char>('a' + rng() % 5);
    const WordStream stream{"x", words};
    const auto table = train(stream);
    std::int64_t previous = compression_power(stream, table, 0);
    violations += previous != 0;
    for (std::size_t k = 1; k <= table.rules.size(); ++k, ++prefixes) {
      const auto g = compression_power(stream, table, k);
      violations += g < previous;
      previous = g;
    }
  }
  const double secs = seconds_since(start);
  std::ostringstream d;
  d << "1000 corpora, " << prefixes << " prefixes, " << violations << " violations, " << secs << "s";
  return {violations == 0 && secs < kMonotonicityBudgetSeconds ? Outcome::pass : Outcome::fail, d.str()};
}

Outcome productivity_oracle() {
  const WordStream fixture{"x", {"abc", "abd"}};
  const auto rho = productivity_rounds(fixture, {1}).per_round.at(1);

  // Words with pairwise disjoint letters: every subword belongs to exactly one word.
  const WordStream disjoint{"x", {"abc", "def", "ghij", "abc", "def", "ghij", "abc", "kl"}};
  const auto unit = productivity_rounds(disjoint, {1, 3, 6});
  bool all_one = true;
  for (const auto& [m, r] : unit.per_round) all_one &= r == 1.0;

  std::ostringstream d;
  d.precision(17);
  d << "rho(abc,abd)=" << rho << " (4/3=" << 4.0 / 3.0 << "), disjoint rho all 1: " << (all_one ? "yes" : "no");
  return {rho == 4.0 / 3.0 && all_one ? Outcome::pass : Outcome::fail, d.str()};
}

Outcome regression_exactness() {
  double worst_exponent = 0.0, worst_r2 = 0.0;
  for (double s : {0.5, 0.7, 1.0, 1.03, 1.25, 2.0}) {
    for (std::size_t n : {10u, 100u}) {
      FrequencyCurve curve;
      for (std::size_t i = 1; i <= n; ++i) curve.freqs.push_back(0.2 * std::pow(static_cast<double>(i), -s));
      const auto fit = ols_loglog(curve, n);
      worst_exponent = std::max(worst_exponent, std::fabs(fit.slope + s));
      worst_r2 = std::max(worst_r2, std::fabs(fit.r_squared - fit.r * fit.r));
    }
  }
  // R^2 against r^2 on non-exact curves too.
  std::mt19937_64 rng(99);
  std::lognormal_distribution<double> noise(0.0, 0.3);
  for (int t = 0; t < 200; ++t) {
    FrequencyCurve curve;
    for (std::size_t i = 1; i <= 100; ++i) curve.freqs.push_back(std::pow(static_cast<double>(i), -0.9) * noise(rng));
    std::sort(curve.freqs.begin(), curve.freqs.end(), std::greater<>());
    const auto fit = ols_loglog(curve, 100);
    worst_r2 = std::max(worst_r2, std::fabs(fit.r_squared - fit.r * fit.r));
  }
  std::ostringstream d;
  d << "max |slope+s|=" << worst_exponent << ", max |R2-r^2|=" << worst_r2;
  return {worst_exponent <= kExponentTolerance && worst_r2 <= kRSquaredTolerance ? Outcome::pass : Outcome::fail,
          d.str()};
}

Outcome statistics_oracle() {
  double worst_p = 0.0, worst_f = 0.0;
  for (const auto& s : testing::reference_sets()) {
    worst_p = std::max(worst_p, std::fabs(welch_t_test(s.a, s.b).p_value - s.welch_p));
    worst_p = std::max(worst_p, std::fabs(one_way_anova({s.a, s.b, s.c}).p_value - s.anova_p));
    const auto t = pooled_t_test(s.a, s.b);
    const auto f = one_way_anova({s.a, s.b});
    worst_f = std::max(worst_f, std::fabs(f.statistic - t.statistic * t.statistic) / std::max(1.0, f.statistic));
  }
  std::ostringstream d;
  d << "5 sets, max p-value error=" << worst_p << ", max |F-t^2| (relative)=" << worst_f;
  return {worst_p <= kPValueTolerance && worst_f <= kFEqualsTSquaredTolerance ? Outcome::pass : Outcome::fail,
          d.str()};
}

// Three generator languages per typology (seeds 7, 8, 9), default generator settings.
Outcome typology_reproduction() {
  const auto start = std::chrono::steady_clock::now();
  ExperimentConfig cfg;
  for (auto kind : {TypologyKind::agglutinative, TypologyKind::analytic}) {
    for (std::uint64_t seed : {7, 8, 9}) {
      LanguageSpec spec;
      spec.lang = std::string(to_string(kind)) + "-" + std::to_string(seed);
      spec.group = kind == TypologyKind::analytic ? Group::analytic : Group::synthetic;
      spec.format = CorpusFormat::generated;
      spec.generator = default_typology_config(kind, seed);
      cfg.languages.push_back(spec);
    }
  }
  cfg.schedule = SampleSchedule{{2000, 5000, 10000, 20000}, 7, SampleMode::prefix};
  cfg.seed = 7;
  std::ostringstream log;
  const auto result = run_pipeline(cfg, log);

  double rho_agg = 0, rho_ana = 0, slope_agg = 0, slope_ana = 0;
  for (const auto& r : result.report.languages) {
    const bool agg = r.group == Group::synthetic;
    (agg ? rho_agg : rho_ana) += r.rho.mean_rho / 3.0;
    (agg ? slope_agg : slope_ana) += std::fabs(r.fit.slope) / 3.0;
  }
  const auto& sampled = *std::find_if(result.report.tests.rbegin(), result.report.tests.rend(), [](const NamedTest& t) {
    return t.name.rfind("sampled_group_test@", 0) == 0;
  });
  const double p_adj = sampled.result.p_adjusted;
  const double secs = seconds_since(start);

  std::ostringstream d;
  d << "rho agg=" << rho_agg << " ana=" << rho_ana << "; |slope| agg=" << slope_agg << " ana=" << slope_ana << "; "
    << sampled.name << " p_adj=" << p_adj << "; " << secs << "s";
  const bool ok = rho_agg > rho_ana && slope_agg < slope_ana && p_adj < kSignificance && secs < kTypologyBudgetSeconds;
  return {ok ? Outcome::pass : Outcome::fail, d.str()};
}

// Parallel-format Bible texts supplied through MORPHOTOK_PBC_EN / MORPHOTOK_PBC_EU.
Outcome pbc_slopes() {
  const char* en = std::getenv("MORPHOTOK_PBC_EN");
  const char* eu = std::getenv("MORPHOTOK_PBC_EU");
  if (!en || !eu) return {Outcome::skip, "set MORPHOTOK_PBC_EN and MORPHOTOK_PBC_EU to parallel-format texts"};
  auto aligned = align_verses({load_parallel(en, "en"), load_parallel(eu, "eu")});
  std::vector<double> slopes;
  for (const auto& docs : aligned.corpora) {
    if (docs.empty()) return {Outcome::fail, "no aligned verses"};
    const auto stream = normalize_all(docs, docs.front().lang);
    const auto table = train(stream);
    const auto index = build_index(segment_words(stream, encode(stream, table)));
    slopes.push_back(ols_loglog(frequency_curve(index, kDefaultTopN, stream.lang)).slope);
  }
  std::ostringstream d;
  d << "slope en=" << slopes[0] << " (target " << kPbcEnglishSlope << "), eu=" << slopes[1] << " (target "
    << kPbcBasqueSlope << "), tolerance " << kPbcSlopeTolerance;
  const bool ok = std::fabs(slopes[0] - kPbcEnglishSlope) <= kPbcSlopeTolerance &&
                  std::fabs(slopes[1] - kPbcBasqueSlope) <= kPbcSlopeTolerance;
  return {ok ? Outcome::pass : Outcome::fail, d.str()};
}

}  // namespace

int main() {
  criterion("bpe-oracle-equivalence", oracle_equivalence);
  criterion("compression-power-monotonicity", monotonicity);
  criterion("productivity-oracle", productivity_oracle);
  criterion("regression-exactness", regression_exactness);
  criterion("statistics-oracle", statistics_oracle);
  criterion("typology-table-reproduction", typology_reproduction);
  criterion("pbc-slopes (data-gated)", pbc_slopes);
  return failures == 0 ? 0 : 1;
}
