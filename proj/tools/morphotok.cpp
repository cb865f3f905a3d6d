// morphotok command-line interface.
//
// Exit status: 0 success, 1 runtime failure, 2 usage error.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "morphotok/morphotok.hpp"

namespace {

using namespace morphotok;

struct CorpusOptions {
  std::string path;
  std::string format = "plain";
  std::string lang = "und";
  bool lowercase = false;
  bool keep_punctuation = false;
  bool strip_symbols = false;

  void add_to(CLI::App& cmd) {
    cmd.add_option("corpus", path, "Corpus file")->required();
    cmd.add_option("--format", format, "plain (one sentence per line) or parallel (verse_id<TAB>text)")
        ->check(CLI::IsMember({"plain", "parallel"}));
    cmd.add_option("--lang", lang, "Language code recorded on the corpus");
    cmd.add_flag("--lowercase", lowercase, "Lowercase before splitting");
    cmd.add_flag("--keep-punctuation", keep_punctuation, "Do not strip punctuation");
    cmd.add_flag("--strip-symbols", strip_symbols, "Also strip symbol characters");
  }

  NormalizeConfig normalize() const { return {!keep_punctuation, strip_symbols, lowercase}; }

  std::vector<WordStream> documents() const {
    const auto docs = format == "parallel" ? load_parallel(path, lang) : load_plaintext(path, lang);
    std::vector<WordStream> out;
    out.reserve(docs.size());
    for (const auto& d : docs) out.push_back(normalize_and_split(d, normalize()));
    return out;
  }

  WordStream stream() const {
    WordStream all;
    all.lang = lang;
    for (auto& d : documents()) all.words.insert(all.words.end(), d.words.begin(), d.words.end());
    if (all.empty()) throw Error(path + ": corpus contains no words");
    return all;
  }
};

std::string fixed6(double v) { return format_double(v == 0.0 ? 0.0 : v, "%.6f"); }

void print_comparisons(const Report& report) {
  std::cout << "metric\tgroup_a\tgroup_b\tmean_a\tmean_b\tdelta\tsigma_a\tsigma_b\tp_value\n";
  for (const auto& c : report.comparisons) {
    std::cout << c.metric_name << '\t' << to_string(c.group_a) << '\t' << to_string(c.group_b) << '\t' << fixed6(c.mean_a)
              << '\t' << fixed6(c.mean_b) << '\t' << fixed6(c.delta) << '\t' << fixed6(c.sigma_a) << '\t'
              << fixed6(c.sigma_b) << '\t' << (c.test ? fixed6(c.test->p_value) : std::string("NA")) << '\n';
  }
  for (const auto& t : report.tests)
    std::cout << "test\t" << t.name << '\t' << to_string(t.result.method) << "\tstatistic=" << fixed6(t.result.statistic)
              << "\tp=" << fixed6(t.result.p_value) << "\tp_adj=" << fixed6(t.result.p_adjusted) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"morphotok: BPE tokenization and morphological-typology measurements"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  bool seed_given = false;
  auto add_seed = [&](CLI::App* cmd) {
    cmd->add_option_function<std::uint64_t>(
        "--seed", [&](const std::uint64_t& s) { seed = s, seed_given = true; }, "Random seed (default 0)");
  };

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run the full pipeline from a config file");
  run->add_option("config", config_path, "Experiment config (JSON)")->required();
  add_seed(run);

  auto* compare = app.add_subcommand("compare", "Compute group comparisons for a config and print them");
  compare->add_option("config", config_path, "Experiment config (JSON)")->required();
  add_seed(compare);

  CorpusOptions corpus;
  std::size_t merges = 500;
  std::optional<std::size_t> vocab_limit;
  std::string out_dir;
  auto* train_cmd = app.add_subcommand("train-bpe", "Train a BPE tokenizer and write merges.txt / vocab.tsv");
  corpus.add_to(*train_cmd);
  train_cmd->add_option("--merges", merges, "Merge limit")->check(CLI::PositiveNumber);
  train_cmd->add_option("--vocab", vocab_limit, "Vocabulary size limit")->check(CLI::PositiveNumber);
  train_cmd->add_option("--out", out_dir, "Output directory")->required();
  add_seed(train_cmd);

  std::string tokenizer_dir;
  bool ids = false, strict = false;
  auto* encode_cmd = app.add_subcommand("encode", "Encode a corpus with a trained tokenizer, one line per sentence");
  corpus.add_to(*encode_cmd);
  encode_cmd->add_option("--tokenizer", tokenizer_dir, "Tokenizer directory")->required();
  encode_cmd->add_flag("--ids", ids, "Print vocabulary ids instead of token strings");
  encode_cmd->add_flag("--strict", strict, "Fail on symbols outside the tokenizer alphabet");
  add_seed(encode_cmd);

  std::vector<std::size_t> merge_counts = kDefaultMergeRounds;
  std::size_t min_subword_len = 1;
  auto* prod_cmd = app.add_subcommand("productivity", "Mean subword productivity over merge rounds");
  corpus.add_to(*prod_cmd);
  prod_cmd->add_option("--merges", merge_counts, "Comma-separated merge counts")->delimiter(',');
  prod_cmd->add_option("--min-subword-len", min_subword_len, "Ignore shorter subwords (code points)")
      ->check(CLI::PositiveNumber);
  add_seed(prod_cmd);

  std::size_t top = kDefaultTopN;
  auto* slopes_cmd = app.add_subcommand("slopes", "Log-log rank-frequency regression of the top subwords");
  corpus.add_to(*slopes_cmd);
  slopes_cmd->add_option("--top", top, "Number of top subwords")->check(CLI::Range(2, 1 << 30));
  slopes_cmd->add_option("--merges", merges, "Merge limit for the tokenizer")->check(CLI::PositiveNumber);
  slopes_cmd->add_option("--min-subword-len", min_subword_len, "Ignore shorter subwords (code points)")
      ->check(CLI::PositiveNumber);
  add_seed(slopes_cmd);

  std::string kind;
  std::size_t words = 20000, line_words = 12;
  auto* gen_cmd = app.add_subcommand("gen-corpus", "Print a synthetic typology corpus");
  gen_cmd->add_option("--kind", kind, "analytic or agglutinative")
      ->required()
      ->check(CLI::IsMember({"analytic", "agglutinative"}));
  gen_cmd->add_option("--words", words, "Number of words")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--line-words", line_words, "Words per output line")->check(CLI::PositiveNumber);
  add_seed(gen_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*run || *compare) {
      auto cfg = load_config(config_path);
      if (seed_given) {
        cfg.seed = seed;
        if (cfg.schedule) cfg.schedule->seed = seed;
      }
      if (*run) {
        run_experiment(cfg);
        std::cout << "report written to " << (cfg.output_dir / "report.json").string() << '\n';
      } else {
        print_comparisons(run_pipeline(cfg).report);
      }
    } else if (*train_cmd) {
      TrainerConfig tc;
      tc.merge_limit = merges;
      tc.vocab_limit = vocab_limit;
      const auto table = train(corpus.stream(), tc);
      export_tokenizer(table, out_dir);
      std::cout << "merges\t" << table.rules.size() << "\nvocab\t" << table.vocab.size() << '\n';
    } else if (*encode_cmd) {
      const auto table = import_tokenizer(tokenizer_dir);
      const Encoder encoder(table, {.pass_through_unknown = !strict});
      const auto docs = corpus.documents();
      if (ids) {
        write_token_ids(std::cout, docs, encoder, table);
      } else {
        for (const auto& d : docs) {
          const auto enc = encode(d, encoder);
          for (std::size_t i = 0; i < enc.tokens.size(); ++i) std::cout << (i ? " " : "") << enc.tokens[i];
          std::cout << '\n';
        }
      }
    } else if (*prod_cmd) {
      const auto r = productivity_rounds(corpus.stream(), merge_counts, {}, {min_subword_len});
      std::cout << "merges\trho\n";
      for (const auto& [m, rho] : r.per_round) std::cout << m << '\t' << fixed6(rho) << '\n';
      std::cout << "mean\t" << fixed6(r.mean_rho) << "\nstd\t" << fixed6(r.std_rho) << '\n';
    } else if (*slopes_cmd) {
      const auto stream = corpus.stream();
      TrainerConfig tc;
      tc.merge_limit = merges;
      const auto table = train(stream, tc);
      const auto index = build_index(segment_words(stream, encode(stream, table)), {min_subword_len});
      const auto fit = ols_loglog(frequency_curve(index, top, stream.lang), top);
      std::cout << "slope\t" << fixed6(fit.slope) << "\nintercept\t" << fixed6(fit.intercept) << "\nr\t" << fixed6(fit.r)
                << "\nr2\t" << fixed6(fit.r_squared) << "\nn\t" << fit.n << '\n';
    } else if (*gen_cmd) {
      const auto stream = generate_typology_corpus(
          [&] {
            auto c = default_typology_config(parse_typology_kind(kind), seed);
            c.word_count = words;
            return c;
          }());
      for (std::size_t i = 0; i < stream.words.size(); ++i)
        std::cout << stream.words[i] << ((i + 1) % line_words == 0 || i + 1 == stream.words.size() ? '\n' : ' ');
    }
  } catch (const std::exception& e) {
    std::cerr << "morphotok: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
