#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "morphotok/bpe.hpp"
#include "support/bpe_oracle.hpp"
#include "support/temp_dir.hpp"

namespace morphotok {
namespace {

std::vector<std::string> random_words(std::mt19937& rng, std::string_view alphabet, std::size_t max_words,
                                      std::size_t max_len) {
  std::vector<std::string> words(1 + rng() % max_words);
  for (auto& w : words) {
    const auto len = 1 + rng() % max_len;
    for (std::size_t j = 0; j < len; ++j) w += alphabet[rng() % alphabet.size()];
  }
  return words;
}

WordStream stream_of(std::vector<std::string> words) { return WordStream{"xx", std::move(words)}; }

TEST(BpeProperties, MatchesBruteForceOracle) {
  std::mt19937 rng(101);
  for (int trial = 0; trial < 200; ++trial) {
    const auto words = random_words(rng, std::string_view("abcd").substr(0, 2 + rng() % 3), 10, 8);
    TrainerConfig cfg;
    cfg.merge_limit = 1 + rng() % 12;
    const auto table = train(stream_of(words), cfg);
    const auto expected = testing::oracle_train(words, *cfg.merge_limit);
    ASSERT_EQ(table.rules.size(), expected.size()) << "trial " << trial;
    for (std::size_t i = 0; i < expected.size(); ++i) {
      EXPECT_EQ(table.rules[i].left, expected[i].left) << "trial " << trial << " rank " << i;
      EXPECT_EQ(table.rules[i].right, expected[i].right) << "trial " << trial << " rank " << i;
      EXPECT_EQ(table.rules[i].pair_count_at_merge, expected[i].count) << "trial " << trial << " rank " << i;
    }
  }
}

TEST(BpeProperties, CompressionPowerNonDecreasing) {
  std::mt19937 rng(202);
  for (int trial = 0; trial < 200; ++trial) {
    const auto stream = stream_of(random_words(rng, "abcde", 40, 10));
    const auto table = train(stream);
    const auto powers = compression_powers(stream, table);
    for (std::size_t k = 1; k < powers.size(); ++k) ASSERT_LE(powers[k - 1], powers[k]) << "trial " << trial;
  }
}

TEST(BpeProperties, EncodingIsLossless) {
  std::mt19937 rng(303);
  const std::vector<std::string> symbols{"a", "b", "ñ", "ü", "ж", "語"};
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::string> words(1 + rng() % 30);
    for (auto& w : words)
      for (std::size_t j = 0, n = 1 + rng() % 7; j < n; ++j) w += symbols[rng() % symbols.size()];
    const auto stream = stream_of(words);
    const auto table = train(stream);
    const auto seg = segment_words(stream, encode(stream, table));
    for (const auto& sw : seg) {
      std::string joined;
      for (const auto& t : sw.tokens) joined += t;
      ASSERT_EQ(joined, sw.word);
    }
  }
}

TEST(BpeProperties, PrefixStable) {
  std::mt19937 rng(404);
  for (int trial = 0; trial < 50; ++trial) {
    const auto stream = stream_of(random_words(rng, "abcdef", 60, 9));
    TrainerConfig big;
    big.merge_limit = 40;
    const auto full = train(stream, big);
    for (std::size_t k : {1, 5, 17}) {
      if (k > full.rules.size()) continue;
      TrainerConfig small;
      small.merge_limit = k;
      EXPECT_EQ(train(stream, small), full.prefix(k));
    }
  }
}

TEST(BpeProperties, IndependentOfWordOrder) {
  std::mt19937 rng(505);
  for (int trial = 0; trial < 30; ++trial) {
    auto words = random_words(rng, "abcde", 50, 8);
    const auto a = train(stream_of(words));
    std::shuffle(words.begin(), words.end(), rng);
    EXPECT_EQ(train(stream_of(words)), a);
    EXPECT_EQ(train(stream_of(words)), a);
  }
}

TEST(BpeProperties, EncodedLengthMatchesGainLedger) {
  std::mt19937 rng(606);
  for (int trial = 0; trial < 100; ++trial) {
    const auto stream = stream_of(random_words(rng, "abcd", 40, 10));
    const auto table = train(stream);
    const auto expected = symbol_count(stream) - (table.gain_ledger.empty() ? 0 : table.gain_ledger.back());
    ASSERT_EQ(static_cast<std::int64_t>(encode(stream, table).token_count()), expected);
  }
}

// Arbitrary rule lists, including repeated pairs and rules that never fire,
// encode exactly like applying each rule in rank order.
TEST(BpeProperties, EncoderMatchesSequentialApplication) {
  std::mt19937 rng(707);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::string> known{"a", "b", "c"};
    std::vector<MergeRule> rules;
    std::vector<std::pair<std::string, std::string>> pairs;
    for (std::size_t i = 0, n = rng() % 10; i < n; ++i) {
      const auto& l = known[rng() % known.size()];
      const auto& r = known[rng() % known.size()];
      rules.push_back({l, r});
      pairs.emplace_back(l, r);
      if (std::find(known.begin(), known.end(), l + r) == known.end()) known.push_back(l + r);
    }
    const auto table = MergeTable::from_rules({"a", "b", "c"}, rules);
    const Encoder encoder(table);
    const auto words = random_words(rng, "abc", 8, 12);
    auto seg = testing::split_chars(words);
    for (const auto& [l, r] : pairs) testing::merge_all(seg, l, r);
    for (std::size_t w = 0; w < words.size(); ++w)
      ASSERT_EQ(encoder.encode_word(words[w]), seg[w]) << "trial " << trial << " word " << words[w];
  }
}

TEST(BpeProperties, TokenizerFilesRoundTrip) {
  std::mt19937 rng(808);
  testing::TempDir dir;
  for (int trial = 0; trial < 20; ++trial) {
    auto words = random_words(rng, "abcdex", 50, 8);
    for (auto& w : words)
      for (auto pos = w.find('x'); pos != std::string::npos; pos = w.find('x')) w.replace(pos, 1, "ä");
    const auto stream = stream_of(words);
    const auto table = train(stream);
    const auto sub = dir / std::to_string(trial);
    export_tokenizer(table, sub);
    const auto back = import_tokenizer(sub);
    ASSERT_TRUE(back.same_model(table));
    EXPECT_EQ(encode(stream, back).tokens, encode(stream, table).tokens);
  }
}

}  // namespace
}  // namespace morphotok
