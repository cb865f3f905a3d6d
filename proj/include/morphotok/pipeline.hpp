#pragma once

// Experiment configuration and the end-to-end pipeline:
// ingest -> tokenizer training -> metrics -> statistics -> report.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>
#include "morphotok/bpe.hpp"
#include "morphotok/common.hpp"
#include "morphotok/corpus.hpp"
#include "morphotok/metrics.hpp"
#include "morphotok/report.hpp"
#include "morphotok/stats.hpp"
#include "morphotok/typology.hpp"

namespace morphotok {

enum class CorpusFormat { plain, parallel, generated };

struct LanguageSpec {
  std::string lang;
  Group group = Group::analytic;
  CorpusFormat format = CorpusFormat::plain;
  std::filesystem::path corpus_path;          // plain / parallel
  std::optional<TypologyGenConfig> generator; // generated
  std::vector<std::filesystem::path> lm_runs; // LM harness curve CSVs, run ids 0..n-1
};

struct ExperimentConfig {
  std::vector<LanguageSpec> languages;
  std::vector<std::size_t> merge_counts = kDefaultMergeRounds;
  std::size_t top_n = kDefaultTopN;
  std::optional<SampleSchedule> schedule;  // default derived from the shortest stream
  NormalizeConfig normalize;
  TrainerConfig trainer;                   // merge_limit defaults to max(merge_counts)
  IndexOptions index;
  TestMethod t_test = TestMethod::welch_t;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "morphotok-out";
};

// All validation problems found in a config, not just the first.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> problems)
      : Error(join(problems)), problems_(std::move(problems)) {}
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& ps) {
    std::string s = "invalid config:";
    for (const auto& p : ps) s += "\n  " + p;
    return s;
  }
  std::vector<std::string> problems_;
};

// Failure inside one pipeline stage.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what) : Error("[" + stage + "] " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

namespace config_detail {

using nlohmann::json;

class Reader {
 public:
  std::vector<std::string> problems;

  void unknown_keys(const json& obj, const std::string& where, std::initializer_list<const char*> known) {
    for (const auto& [k, v] : obj.items())
      if (std::none_of(known.begin(), known.end(), [&](const char* n) { return k == n; }))
        problems.push_back(where + k + ": unknown field");
  }

  template <typename T>
  std::optional<T> get(const json& obj, const char* key, const std::string& where, bool required = false) {
    if (!obj.contains(key) || obj.at(key).is_null()) {
      if (required) problems.push_back(where + key + ": required field missing");
      return std::nullopt;
    }
    try {
      if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
        const auto& v = obj.at(key);
        if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
          throw std::invalid_argument("");
      }
      return obj.at(key).get<T>();
    } catch (const std::exception&) {
      problems.push_back(where + key + ": wrong type");
      return std::nullopt;
    }
  }
};

template <typename T>
void assign(std::optional<T> v, T& dst) {
  if (v) dst = std::move(*v);
}

inline TypologyGenConfig read_generator(Reader& rd, const json& g, const std::string& where) {
  rd.unknown_keys(g, where, {"kind", "seed", "words", "stem_count", "affix_count", "min_affixes", "max_affixes",
                             "function_word_count", "function_word_rate"});
  TypologyGenConfig cfg;
  if (auto kind = rd.get<std::string>(g, "kind", where, true)) {
    try {
      cfg = default_typology_config(parse_typology_kind(*kind), 0);
    } catch (const Error& e) {
      rd.problems.push_back(where + "kind: " + e.what());
    }
  }
  assign(rd.get<std::uint64_t>(g, "seed", where), cfg.seed);
  assign(rd.get<std::size_t>(g, "words", where), cfg.word_count);
  assign(rd.get<std::size_t>(g, "stem_count", where), cfg.stem_count);
  assign(rd.get<std::size_t>(g, "affix_count", where), cfg.affix_count);
  assign(rd.get<std::size_t>(g, "min_affixes", where), cfg.min_affixes);
  assign(rd.get<std::size_t>(g, "max_affixes", where), cfg.max_affixes);
  assign(rd.get<std::size_t>(g, "function_word_count", where), cfg.function_word_count);
  assign(rd.get<double>(g, "function_word_rate", where), cfg.function_word_rate);
  try {
    cfg.validate();
  } catch (const Error& e) {
    rd.problems.push_back(where.substr(0, where.size() - 1) + ": " + e.what());
  }
  return cfg;
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace config_detail

// Parses and validates a config document. Relative paths resolve against base_dir.
inline ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = ".") {
  using config_detail::assign;
  config_detail::Reader rd;
  ExperimentConfig cfg;
  if (!doc.is_object()) throw ConfigError({"config: top level must be an object"});

  rd.unknown_keys(doc, "", {"languages", "merge_counts", "top_n", "schedule", "normalize", "trainer",
                            "min_subword_len", "t_test", "seed", "output_dir"});

  if (!doc.contains("languages") || !doc["languages"].is_array() || doc["languages"].empty()) {
    rd.problems.push_back("languages: at least one language required");
  } else {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < doc["languages"].size(); ++i) {
      const auto& l = doc["languages"][i];
      const std::string where = "languages[" + std::to_string(i) + "].";
      if (!l.is_object()) {
        rd.problems.push_back(where.substr(0, where.size() - 1) + ": must be an object");
        continue;
      }
      rd.unknown_keys(l, where, {"lang", "group", "corpus_path", "corpus_format", "generator", "lm_runs"});
      LanguageSpec spec;
      if (auto lang = rd.get<std::string>(l, "lang", where, true)) {
        spec.lang = *lang;
        if (spec.lang.empty() || spec.lang.find_first_of("/\\ \t") != std::string::npos)
          rd.problems.push_back(where + "lang: must be non-empty without separators");
        else if (!seen.insert(spec.lang).second)
          rd.problems.push_back(where + "lang: duplicate language \"" + spec.lang + "\"");
      }
      if (auto group = rd.get<std::string>(l, "group", where, true)) {
        try {
          spec.group = parse_group(*group);
        } catch (const Error& e) {
          rd.problems.push_back(where + "group: " + e.what());
        }
      }
      const auto format = rd.get<std::string>(l, "corpus_format", where).value_or("plain");
      if (format == "plain") spec.format = CorpusFormat::plain;
      else if (format == "parallel") spec.format = CorpusFormat::parallel;
      else if (format == "generated") spec.format = CorpusFormat::generated;
      else rd.problems.push_back(where + "corpus_format: expected plain, parallel or generated");

      if (spec.format == CorpusFormat::generated) {
        if (!l.contains("generator") || !l["generator"].is_object())
          rd.problems.push_back(where + "generator: required object for corpus_format generated");
        else
          spec.generator = config_detail::read_generator(rd, l["generator"], where + "generator.");
      } else if (auto path = rd.get<std::string>(l, "corpus_path", where, true)) {
        spec.corpus_path = config_detail::resolve(base_dir, *path);
      }
      if (auto runs = rd.get<std::vector<std::string>>(l, "lm_runs", where))
        for (const auto& r : *runs) spec.lm_runs.push_back(config_detail::resolve(base_dir, r));
      cfg.languages.push_back(std::move(spec));
    }
  }

  assign(rd.get<std::vector<std::size_t>>(doc, "merge_counts", ""), cfg.merge_counts);
  const bool counts_ok = !cfg.merge_counts.empty() && !std::count(cfg.merge_counts.begin(), cfg.merge_counts.end(), 0u);
  if (!counts_ok) rd.problems.push_back("merge_counts: must be a non-empty list of positive counts");
  assign(rd.get<std::size_t>(doc, "top_n", ""), cfg.top_n);
  if (cfg.top_n < 2) rd.problems.push_back("top_n: must be >= 2");
  assign(rd.get<std::uint64_t>(doc, "seed", ""), cfg.seed);
  assign(rd.get<std::size_t>(doc, "min_subword_len", ""), cfg.index.min_subword_len);
  if (cfg.index.min_subword_len == 0) rd.problems.push_back("min_subword_len: must be >= 1");
  if (auto t = rd.get<std::string>(doc, "t_test", "")) {
    if (*t == "welch") cfg.t_test = TestMethod::welch_t;
    else if (*t == "pooled") cfg.t_test = TestMethod::pooled_t;
    else rd.problems.push_back("t_test: expected welch or pooled");
  }
  if (auto out = rd.get<std::string>(doc, "output_dir", "")) cfg.output_dir = config_detail::resolve(base_dir, *out);

  if (doc.contains("schedule") && !doc["schedule"].is_null()) {
    const auto& s = doc["schedule"];
    SampleSchedule sched;
    sched.seed = cfg.seed;
    rd.unknown_keys(s, "schedule.", {"sizes", "seed", "mode"});
    assign(rd.get<std::vector<std::size_t>>(s, "sizes", "schedule.", true), sched.sizes);
    assign(rd.get<std::uint64_t>(s, "seed", "schedule."), sched.seed);
    const auto mode = rd.get<std::string>(s, "mode", "schedule.").value_or("prefix");
    if (mode == "prefix") sched.mode = SampleMode::prefix;
    else if (mode == "shuffle") sched.mode = SampleMode::shuffle;
    else rd.problems.push_back("schedule.mode: expected prefix or shuffle");
    try {
      sched.validate();
    } catch (const Error& e) {
      rd.problems.push_back(std::string("schedule: ") + e.what());
    }
    cfg.schedule = sched;
  }

  if (doc.contains("normalize")) {
    const auto& n = doc["normalize"];
    rd.unknown_keys(n, "normalize.", {"strip_punctuation", "strip_symbols", "lowercase"});
    assign(rd.get<bool>(n, "strip_punctuation", "normalize."), cfg.normalize.strip_punctuation);
    assign(rd.get<bool>(n, "strip_symbols", "normalize."), cfg.normalize.strip_symbols);
    assign(rd.get<bool>(n, "lowercase", "normalize."), cfg.normalize.lowercase);
  }

  cfg.trainer.merge_limit = !counts_ok ? 500 : *std::max_element(cfg.merge_counts.begin(), cfg.merge_counts.end());
  if (doc.contains("trainer")) {
    const auto& t = doc["trainer"];
    rd.unknown_keys(t, "trainer.", {"merge_limit", "vocab_limit", "tie_break", "intra_word_only"});
    if (auto m = rd.get<std::size_t>(t, "merge_limit", "trainer.")) cfg.trainer.merge_limit = *m;
    if (auto v = rd.get<std::size_t>(t, "vocab_limit", "trainer.")) cfg.trainer.vocab_limit = *v;
    if (auto tb = rd.get<std::string>(t, "tie_break", "trainer."); tb && *tb != "lexicographic")
      rd.problems.push_back("trainer.tie_break: only lexicographic is supported");
    assign(rd.get<bool>(t, "intra_word_only", "trainer."), cfg.trainer.intra_word_only);
    try {
      cfg.trainer.validate();
    } catch (const Error& e) {
      rd.problems.push_back(e.what());
    }
  }

  if (!rd.problems.empty()) throw ConfigError(rd.problems);
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError({"cannot open config " + path.string()});
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError({path.string() + ": " + e.what()});
  }
  return parse_config(doc, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

// Worker cap from MORPHOTOK_THREADS; 0 or unset means hardware concurrency.
inline std::size_t worker_count(std::size_t tasks) {
  std::size_t n = 0;
  if (const char* env = std::getenv("MORPHOTOK_THREADS")) {
    try {
      n = std::stoul(env);
    } catch (const std::exception&) {
      throw Error("MORPHOTOK_THREADS must be a non-negative integer");
    }
  }
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(n, tasks));
}

// Runs fn(i) for i in [0, n) on up to worker_count(n) threads; rethrows the first failure by index.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next++) < n;) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t workers = worker_count(n);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct LanguageCorpus {
  std::string lang;
  std::vector<WordStream> documents;  // one per source line / verse
  WordStream stream;                  // all documents concatenated
};

struct PipelineResult {
  Report report;
  std::vector<LanguageCorpus> corpora;
  std::vector<MergeTable> tables;
};

namespace pipeline_detail {

template <typename Fn>
auto stage(const std::string& name, const std::string& lang, Fn&& fn) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, lang.empty() ? std::string(e.what()) : lang + ": " + e.what());
  }
}

inline std::vector<LanguageCorpus> ingest(const ExperimentConfig& cfg, std::ostream& log) {
  const auto& langs = cfg.languages;
  std::vector<std::vector<Document>> docs(langs.size());
  parallel_for(langs.size(), [&](std::size_t i) {
    const auto& spec = langs[i];
    stage("ingest", spec.lang, [&] {
      switch (spec.format) {
        case CorpusFormat::plain: docs[i] = load_plaintext(spec.corpus_path.string(), spec.lang); break;
        case CorpusFormat::parallel: docs[i] = load_parallel(spec.corpus_path.string(), spec.lang); break;
        case CorpusFormat::generated: break;
      }
      return 0;
    });
  });

  // Parallel corpora are restricted to their shared verses.
  std::vector<std::size_t> parallel_idx;
  for (std::size_t i = 0; i < langs.size(); ++i)
    if (langs[i].format == CorpusFormat::parallel) parallel_idx.push_back(i);
  if (parallel_idx.size() > 1) {
    std::vector<std::vector<Document>> group;
    for (auto i : parallel_idx) group.push_back(std::move(docs[i]));
    auto aligned = stage("ingest", "", [&] { return align_verses(group); });
    if (aligned.dropped > 0) log << "ingest: dropped " << aligned.dropped << " unaligned verses\n";
    for (std::size_t k = 0; k < parallel_idx.size(); ++k) docs[parallel_idx[k]] = std::move(aligned.corpora[k]);
  }

  std::vector<LanguageCorpus> out(langs.size());
  parallel_for(langs.size(), [&](std::size_t i) {
    const auto& spec = langs[i];
    stage("ingest", spec.lang, [&] {
      auto& c = out[i];
      c.lang = spec.lang;
      if (spec.format == CorpusFormat::generated) {
        c.stream = generate_typology_corpus(*spec.generator, spec.lang);
        c.documents.push_back(c.stream);
      } else {
        c.stream.lang = spec.lang;
        for (const auto& d : docs[i]) {
          c.documents.push_back(normalize_and_split(d, cfg.normalize));
          const auto& words = c.documents.back().words;
          c.stream.words.insert(c.stream.words.end(), words.begin(), words.end());
        }
      }
      if (c.stream.empty()) throw Error("corpus contains no words");
      return 0;
    });
  });
  return out;
}

inline SampleSchedule default_schedule(const std::vector<LanguageCorpus>& corpora, std::uint64_t seed) {
  std::size_t n = SIZE_MAX;
  for (const auto& c : corpora) n = std::min(n, c.stream.total_words());
  SampleSchedule s;
  s.seed = seed;
  for (std::size_t q = 1; q <= 4; ++q) {
    const std::size_t size = n * q / 4;
    if (size > 0 && (s.sizes.empty() || size > s.sizes.back())) s.sizes.push_back(size);
  }
  return s;
}

}  // namespace pipeline_detail

// Every stage except file emission; tokenizers are kept in the result.
inline PipelineResult run_pipeline(const ExperimentConfig& cfg, std::ostream& log = std::clog) {
  using pipeline_detail::stage;
  PipelineResult result;
  result.corpora = pipeline_detail::ingest(cfg, log);
  const auto schedule = cfg.schedule.value_or(pipeline_detail::default_schedule(result.corpora, cfg.seed));

  const std::size_t n = cfg.languages.size();
  result.tables.resize(n);
  auto& records = result.report.languages;
  records.resize(n);
  parallel_for(n, [&](std::size_t i) {
    const auto& spec = cfg.languages[i];
    const auto& stream = result.corpora[i].stream;
    auto& rec = records[i];
    rec.lang = spec.lang;
    rec.group = spec.group;
    result.tables[i] = stage("train", spec.lang, [&] { return train(stream, cfg.trainer); });
    stage("metrics", spec.lang, [&] {
      rec.rho = productivity_rounds(stream, cfg.merge_counts, cfg.trainer, cfg.index);
      const auto segmented = segment_words(stream, encode(stream, result.tables[i]));
      rec.freq = frequency_curve(build_index(segmented, cfg.index), cfg.top_n, spec.lang);
      rec.trend = repetition_trend(stream, schedule, cfg.trainer, cfg.top_n, cfg.index);
      return 0;
    });
    stage("stats", spec.lang, [&] {
      rec.fit = ols_loglog(rec.freq, cfg.top_n);
      return 0;
    });
    stage("lm", spec.lang, [&] {
      for (std::size_t r = 0; r < spec.lm_runs.size(); ++r)
        rec.lm_runs.push_back(summarize_lm_run(spec.lang, static_cast<int>(r), spec.lm_runs[r].string()));
      return 0;
    });
  });

  stage("stats", "", [&] {
    std::size_t n_syn = 0, n_ana = 0;
    for (const auto& r : records) (r.group == Group::synthetic ? n_syn : n_ana)++;
    if (n_syn == 0 || n_ana == 0) {
      log << "stats: group comparisons skipped (both groups need at least one language)\n";
    } else {
      std::vector<std::string> metrics{"productivity", "slope", "trend_final"};
      const bool all_lm = std::all_of(records.begin(), records.end(), [](const auto& r) { return !r.lm_runs.empty(); });
      if (all_lm) metrics.insert(metrics.end(), {"lm_final_loss", "lm_final_perplexity"});
      for (const auto& m : metrics) result.report.comparisons.push_back(compare_groups(records, m, Group::synthetic, Group::analytic, cfg.t_test));
      if (n_syn >= 2 && n_ana >= 2) {
        std::vector<TrendCurve> trends;
        std::vector<std::string> groups;
        for (const auto& r : records) {
          trends.push_back(r.trend);
          groups.push_back(to_string(r.group));
        }
        const auto sg = group_test_over_points(trends, groups, "synthetic", "analytic", cfg.t_test);
        for (std::size_t p = 0; p < sg.per_point.size(); ++p)
          result.report.tests.push_back({"sampled_group_test@" + std::to_string(schedule.sizes[p]), sg.per_point[p]});
      }
    }
    if (records.size() >= 2 && schedule.sizes.size() >= 2) {
      std::vector<TrendCurve> trends;
      for (const auto& r : records) trends.push_back(r.trend);
      result.report.tests.push_back({"language_anova", language_anova(trends)});
    }
    return 0;
  });
  return result;
}

// Writes tokenizers (merges.txt, vocab.tsv, corpus.ids) under output_dir/tokenizers/<lang>/.
inline void export_tokenizers(const ExperimentConfig& cfg, const PipelineResult& result) {
  parallel_for(result.tables.size(), [&](std::size_t i) {
    const auto& lang = cfg.languages[i].lang;
    pipeline_detail::stage("export", lang, [&] {
      const auto dir = cfg.output_dir / "tokenizers" / lang;
      export_tokenizer(result.tables[i], dir);
      std::ofstream ids(dir / "corpus.ids", std::ios::binary);
      if (!ids) throw Error("cannot write " + (dir / "corpus.ids").string());
      write_token_ids(ids, result.corpora[i].documents, Encoder(result.tables[i]), result.tables[i]);
      if (!ids) throw Error("write failure on " + (dir / "corpus.ids").string());
      return 0;
    });
  });
}

inline PipelineResult run_experiment(const ExperimentConfig& cfg, std::ostream& log = std::clog) {
  auto result = run_pipeline(cfg, log);
  export_tokenizers(cfg, result);
  pipeline_detail::stage("report", "", [&] {
    emit_report(result.report, cfg.output_dir);
    return 0;
  });
  return result;
}

}  // namespace morphotok
