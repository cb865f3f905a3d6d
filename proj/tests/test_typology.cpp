#include <gtest/gtest.h>

#include <set>

#include "morphotok/typology.hpp"

namespace morphotok {
namespace {

TypologyGenConfig small(TypologyKind kind, std::uint64_t seed, std::size_t words = 3000) {
  auto c = default_typology_config(kind, seed);
  c.word_count = words;
  return c;
}

TEST(Generator, DeterministicPerSeed) {
  const auto a = generate_typology_corpus(small(TypologyKind::agglutinative, 7));
  EXPECT_EQ(a.words, generate_typology_corpus(small(TypologyKind::agglutinative, 7)).words);
  EXPECT_NE(a.words, generate_typology_corpus(small(TypologyKind::agglutinative, 8)).words);
  EXPECT_EQ(a.total_words(), 3000u);
  EXPECT_EQ(a.lang, "agglutinative-7");
  EXPECT_EQ(generate_typology_corpus(small(TypologyKind::analytic, 1), "en").lang, "en");
}

const std::vector<std::string> kAnalyticSeed7Prefix{"dop", "rim", "ho", "mupih", "kobvib", "toj", "noreba", "ja"};

TEST(Generator, FixedPrefix) {
  // Frozen from a run of this implementation; guards the RNG stream against drift.
  const auto words = generate_typology_corpus(small(TypologyKind::analytic, 7, 8)).words;
  EXPECT_EQ(words, kAnalyticSeed7Prefix);
}

TEST(Generator, TypologiesDifferInWordShape) {
  const auto agg = generate_typology_corpus(small(TypologyKind::agglutinative, 3));
  const auto ana = generate_typology_corpus(small(TypologyKind::analytic, 3));
  auto mean_len = [](const WordStream& s) {
    double n = 0;
    for (const auto& w : s.words) n += static_cast<double>(w.size());
    return n / static_cast<double>(s.words.size());
  };
  auto types = [](const WordStream& s) { return std::set<std::string>(s.words.begin(), s.words.end()).size(); };
  EXPECT_GT(mean_len(agg), mean_len(ana));
  EXPECT_GT(types(agg), types(ana));
}

TEST(Generator, AsciiLowercaseWords) {
  for (const auto& w : generate_typology_corpus(small(TypologyKind::agglutinative, 5, 500)).words) {
    ASSERT_FALSE(w.empty());
    for (char c : w) ASSERT_TRUE(c >= 'a' && c <= 'z') << w;
  }
}

TEST(Generator, ConfigValidation) {
  auto c = default_agglutinative(0);
  c.min_affixes = 4;
  EXPECT_THROW(generate_typology_corpus(c), Error);
  c = default_agglutinative(0);
  c.function_word_rate = 1.5;
  EXPECT_THROW(generate_typology_corpus(c), Error);
  c = default_agglutinative(0);
  c.word_count = 0;
  EXPECT_THROW(generate_typology_corpus(c), Error);
  EXPECT_THROW(parse_typology_kind("fusional"), Error);
  EXPECT_EQ(parse_typology_kind("analytic"), TypologyKind::analytic);
}

TEST(Rng, BoundedDrawsStayInRange) {
  Rng rng(42);
  for (int i = 0; i < 10000; ++i) {
    ASSERT_LT(rng.below(7), 7u);
    const auto v = rng.between(3, 5);
    ASSERT_TRUE(v >= 3 && v <= 5);
    const double u = rng.unit();
    ASSERT_TRUE(u >= 0.0 && u < 1.0);
  }
}

TEST(GroupTest, BonferroniOverSchedulePoints) {
  std::vector<TrendCurve> trends{
      {"a1", {10, 20, 30}, {0.10, 0.08, 0.07}}, {"a2", {10, 20, 30}, {0.11, 0.09, 0.075}},
      {"a3", {10, 20, 30}, {0.12, 0.085, 0.072}}, {"b1", {10, 20, 30}, {0.20, 0.18, 0.17}},
      {"b2", {10, 20, 30}, {0.21, 0.19, 0.16}}, {"b3", {10, 20, 30}, {0.22, 0.17, 0.18}},
  };
  const std::vector<std::string> groups{"x", "x", "x", "y", "y", "y"};
  const auto r = group_test_over_points(trends, groups, "x", "y");
  ASSERT_EQ(r.per_point.size(), 3u);
  for (std::size_t p = 0; p < 3; ++p) {
    const std::vector<double> a{trends[0].values[p], trends[1].values[p], trends[2].values[p]};
    const std::vector<double> b{trends[3].values[p], trends[4].values[p], trends[5].values[p]};
    const auto expected = welch_t_test(a, b, 3);
    EXPECT_DOUBLE_EQ(r.per_point[p].statistic, expected.statistic);
    EXPECT_DOUBLE_EQ(r.per_point[p].p_adjusted, std::min(1.0, 3 * expected.p_value));
  }
  EXPECT_DOUBLE_EQ(r.final_point.p_adjusted, r.per_point.back().p_adjusted);
  EXPECT_EQ(r.final_point.family_size, 3u);

  EXPECT_THROW(group_test_over_points(trends, {"x", "x"}, "x", "y"), Error);
  EXPECT_THROW(group_test_over_points(trends, std::vector<std::string>(6, "x"), "x", "y"), Error);
  trends[0].values.pop_back();
  EXPECT_THROW(group_test_over_points(trends, groups, "x", "y"), Error);
}

TEST(GroupTest, SampledOnGeneratedLanguages) {
  std::vector<GroupedStream> langs;
  for (std::uint64_t s : {1, 2}) {
    langs.push_back({generate_typology_corpus(small(TypologyKind::agglutinative, s, 2000)), "agg"});
    langs.push_back({generate_typology_corpus(small(TypologyKind::analytic, s, 2000)), "ana"});
  }
  TrainerConfig cfg;
  cfg.merge_limit = 50;
  const SampleSchedule schedule{{1000, 2000}, 0, SampleMode::prefix};
  const auto r = sampled_group_test(langs, schedule, "agg", "ana", cfg, 20);
  EXPECT_EQ(r.per_point.size(), 2u);
  EXPECT_EQ(r.trends.size(), 4u);
  EXPECT_EQ(r.trends[0].sample_sizes, (std::vector<std::size_t>{1000, 2000}));
  const auto again = sampled_group_test(langs, schedule, "agg", "ana", cfg, 20);
  EXPECT_EQ(again.final_point.statistic, r.final_point.statistic);

  const auto anova = language_anova(r.trends);
  EXPECT_EQ(anova.method, TestMethod::anova_f);
  EXPECT_DOUBLE_EQ(anova.df, 3.0);
  EXPECT_DOUBLE_EQ(anova.df2, 4.0);
}

}  // namespace
}  // namespace morphotok
