#pragma once

// Per-language records, group comparisons (difference of means and
// within-group spread), and the report.json / CSV outputs.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include "morphotok/common.hpp"
#include "morphotok/corpus.hpp"
#include "morphotok/metrics.hpp"
#include "morphotok/stats.hpp"

namespace morphotok {

inline constexpr int kReportSchemaVersion = 1;

enum class Group { analytic, synthetic };

inline const char* to_string(Group g) { return g == Group::analytic ? "analytic" : "synthetic"; }

inline Group parse_group(const std::string& s) {
  if (s == "analytic") return Group::analytic;
  if (s == "synthetic") return Group::synthetic;
  throw Error("unknown group \"" + s + "\" (expected analytic or synthetic)");
}

// ---- language-model curves (written by the LM harness) ----

inline constexpr std::string_view kLMCurveHeader = "step,split,loss,perplexity";

struct LMCurveRow {
  std::int64_t step = 0;
  std::string split;  // "train" or "val"
  double loss = 0.0;
  double perplexity = 0.0;
};

struct LMRunSummary {
  std::string lang;
  int run_id = 0;
  double final_loss = 0.0;        // mean NLL in nats
  double final_perplexity = 0.0;  // exp(final_loss)
  std::string curve_path;
  std::vector<LMCurveRow> curve;
};

inline std::vector<LMCurveRow> load_lm_curve(const std::string& path) {
  auto in = detail::open_input(path);
  std::string line;
  std::size_t lineno = 1;
  if (!detail::read_line(in, line, lineno) || line != kLMCurveHeader)
    throw ParseError(path, 1, "expected header \"" + std::string(kLMCurveHeader) + "\"");
  std::vector<LMCurveRow> rows;
  std::map<std::string, std::int64_t> last_step;
  while (detail::read_line(in, line, ++lineno)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 4) throw ParseError(path, lineno, "expected 4 comma-separated fields");
    LMCurveRow row;
    try {
      std::size_t used = 0;
      row.step = std::stoll(f[0], &used);
      if (used != f[0].size()) throw std::invalid_argument("step");
      row.loss = std::stod(f[2]);
      row.perplexity = std::stod(f[3]);
    } catch (const std::exception&) {
      throw ParseError(path, lineno, "non-numeric field");
    }
    row.split = f[1];
    if (row.split != "train" && row.split != "val") throw ParseError(path, lineno, "split must be train or val");
    if (!std::isfinite(row.loss) || !std::isfinite(row.perplexity)) throw ParseError(path, lineno, "non-finite value");
    auto [it, fresh] = last_step.emplace(row.split, row.step);
    if (!fresh) {
      if (row.step <= it->second) throw ParseError(path, lineno, "steps must be strictly increasing per split");
      it->second = row.step;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path, lineno, "no curve rows");
  return rows;
}

// Final metric: last validation row when present, else last training row.
inline LMRunSummary summarize_lm_run(const std::string& lang, int run_id, const std::string& path) {
  LMRunSummary s;
  s.lang = lang;
  s.run_id = run_id;
  s.curve_path = path;
  s.curve = load_lm_curve(path);
  const LMCurveRow* last = nullptr;
  for (const auto& r : s.curve)
    if (r.split == "val") last = &r;
  if (!last) last = &s.curve.back();
  s.final_loss = last->loss;
  s.final_perplexity = std::exp(s.final_loss);
  return s;
}

// ---- records and comparisons ----

struct LanguageRecord {
  std::string lang;
  Group group = Group::analytic;
  ProductivityResult rho;
  RegressionFit fit;
  TrendCurve trend;
  FrequencyCurve freq;
  std::vector<LMRunSummary> lm_runs;
};

using MetricSelector = std::function<std::optional<double>(const LanguageRecord&)>;

inline std::optional<double> mean_of_runs(const LanguageRecord& r, double LMRunSummary::*field) {
  if (r.lm_runs.empty()) return std::nullopt;
  double s = 0.0;
  for (const auto& run : r.lm_runs) s += run.*field;
  return s / static_cast<double>(r.lm_runs.size());
}

// Named metrics: productivity, slope, abs_slope, trend_final, lm_final_loss, lm_final_perplexity.
inline MetricSelector metric_selector(const std::string& name) {
  if (name == "productivity") return [](const LanguageRecord& r) -> std::optional<double> { return r.rho.mean_rho; };
  if (name == "slope") return [](const LanguageRecord& r) -> std::optional<double> { return r.fit.slope; };
  if (name == "abs_slope") return [](const LanguageRecord& r) -> std::optional<double> { return std::fabs(r.fit.slope); };
  if (name == "trend_final")
    return [](const LanguageRecord& r) -> std::optional<double> {
      if (r.trend.values.empty()) return std::nullopt;
      return r.trend.values.back();
    };
  if (name == "lm_final_loss") return [](const LanguageRecord& r) { return mean_of_runs(r, &LMRunSummary::final_loss); };
  if (name == "lm_final_perplexity")
    return [](const LanguageRecord& r) { return mean_of_runs(r, &LMRunSummary::final_perplexity); };
  throw Error("unknown metric \"" + name + "\"");
}

struct GroupComparison {
  std::string metric_name;
  Group group_a = Group::synthetic;
  Group group_b = Group::analytic;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  double mean_a = 0.0;
  double mean_b = 0.0;
  double delta = 0.0;  // mean_a - mean_b
  double sigma_a = 0.0;
  double sigma_b = 0.0;
  std::optional<TestResult> test;  // absent when a group has a single member
};

inline GroupComparison compare_groups(const std::vector<LanguageRecord>& records, const std::string& metric_name,
                                      const MetricSelector& metric, Group group_a = Group::synthetic,
                                      Group group_b = Group::analytic, TestMethod method = TestMethod::welch_t) {
  std::vector<double> a, b;
  for (const auto& r : records) {
    const auto v = metric(r);
    if (!v) continue;
    if (r.group == group_a) a.push_back(*v);
    else if (r.group == group_b) b.push_back(*v);
  }
  if (a.empty() || b.empty())
    throw Error("compare_groups(" + metric_name + "): group " + to_string(a.empty() ? group_a : group_b) +
                " has no values");
  GroupComparison c;
  c.metric_name = metric_name;
  c.group_a = group_a;
  c.group_b = group_b;
  c.n_a = a.size();
  c.n_b = b.size();
  c.mean_a = mean(a);
  c.mean_b = mean(b);
  c.delta = c.mean_a - c.mean_b;
  c.sigma_a = sample_stddev(a);
  c.sigma_b = sample_stddev(b);
  if (a.size() >= 2 && b.size() >= 2) c.test = two_sample_test(a, b, 1, method);
  return c;
}

inline GroupComparison compare_groups(const std::vector<LanguageRecord>& records, const std::string& metric_name,
                                      Group group_a = Group::synthetic, Group group_b = Group::analytic,
                                      TestMethod method = TestMethod::welch_t) {
  return compare_groups(records, metric_name, metric_selector(metric_name), group_a, group_b, method);
}

struct NamedTest {
  std::string name;
  TestResult result;
};

struct Report {
  std::vector<LanguageRecord> languages;
  std::vector<GroupComparison> comparisons;
  std::vector<NamedTest> tests;
};

// ---- serialization ----

namespace report_detail {

using nlohmann::json;

// Finite numbers rounded to 6 significant digits; non-finite become null.
inline json number(double v) { return std::isfinite(v) ? json(round_sig6(v)) : json(nullptr); }

inline json to_json(const TestResult& t) {
  return json{{"method", to_string(t.method)},
              {"statistic", number(t.statistic)},
              {"statistic_finite", std::isfinite(t.statistic)},
              {"p_value", number(t.p_value)},
              {"p_adjusted", number(t.p_adjusted)},
              {"df", number(t.df)},
              {"df2", number(t.df2)},
              {"family_size", t.family_size}};
}

inline json to_json(const LanguageRecord& r) {
  json rounds = json::array();
  for (const auto& [m, rho] : r.rho.per_round) rounds.push_back({{"merges", m}, {"rho", number(rho)}});
  json values = json::array();
  for (double v : r.trend.values) values.push_back(number(v));
  json freqs = json::array();
  for (double f : r.freq.freqs) freqs.push_back(number(f));
  json runs = json::array();
  for (const auto& run : r.lm_runs)
    runs.push_back({{"run_id", run.run_id},
                    {"final_loss", number(run.final_loss)},
                    {"final_perplexity", number(run.final_perplexity)},
                    {"curve_path", run.curve_path}});
  return json{{"lang", r.lang},
              {"group", to_string(r.group)},
              {"productivity", {{"per_round", rounds}, {"mean", number(r.rho.mean_rho)}, {"std", number(r.rho.std_rho)}}},
              {"fit",
               {{"slope", number(r.fit.slope)},
                {"intercept", number(r.fit.intercept)},
                {"r", number(r.fit.r)},
                {"r_squared", number(r.fit.r_squared)},
                {"n", r.fit.n},
                {"degenerate", r.fit.degenerate}}},
              {"trend", {{"sample_sizes", r.trend.sample_sizes}, {"values", values}}},
              {"frequency", {{"total_tokens", r.freq.total_tokens}, {"freqs", freqs}}},
              {"lm_runs", runs}};
}

inline json to_json(const GroupComparison& c) {
  return json{{"metric", c.metric_name},
              {"group_a", to_string(c.group_a)},
              {"group_b", to_string(c.group_b)},
              {"n_a", c.n_a},
              {"n_b", c.n_b},
              {"mean_a", number(c.mean_a)},
              {"mean_b", number(c.mean_b)},
              {"delta", number(c.delta)},
              {"sigma_a", number(c.sigma_a)},
              {"sigma_b", number(c.sigma_b)},
              {"test", c.test ? to_json(*c.test) : json(nullptr)}};
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::string_view header) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw Error("cannot write " + path.string());
    out_ << header << '\n';
  }
  template <typename... Cells>
  void row(const Cells&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
    out_ << '\n';
  }
  void close() {
    out_.close();
    if (!out_) throw Error("write failure on " + path_.string());
  }

 private:
  static std::string cell(double v) { return std::isfinite(v) ? format_sig6(v) : ""; }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  template <typename T>
    requires std::is_integral_v<T>
  static std::string cell(T v) { return std::to_string(v); }

  std::filesystem::path path_;
  std::ofstream out_;
};

}  // namespace report_detail

inline std::string report_json(const Report& report) {
  using nlohmann::json;
  json langs = json::array(), comps = json::array(), tests = json::array();
  for (const auto& r : report.languages) langs.push_back(report_detail::to_json(r));
  for (const auto& c : report.comparisons) comps.push_back(report_detail::to_json(c));
  for (const auto& t : report.tests) tests.push_back({{"name", t.name}, {"result", report_detail::to_json(t.result)}});
  json doc{{"schema_version", kReportSchemaVersion}, {"languages", langs}, {"comparisons", comps}, {"tests", tests}};
  return doc.dump(2) + "\n";
}

// report.json, table1.csv, productivity.csv, and per-language trend, frequency and LM curve CSVs.
inline void emit_report(const Report& report, const std::filesystem::path& dir) {
  using report_detail::CsvWriter;
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "report.json", std::ios::binary);
    if (!out) throw Error("cannot write " + (dir / "report.json").string());
    out << report_json(report);
    if (!out) throw Error("write failure on " + (dir / "report.json").string());
  }
  {
    CsvWriter t1(dir / "table1.csv", "lang,type,slope,r,r2");
    for (const auto& r : report.languages) t1.row(r.lang, to_string(r.group), r.fit.slope, r.fit.r, r.fit.r_squared);
    t1.close();
  }
  {
    CsvWriter p(dir / "productivity.csv", "lang,group,merges,rho,mean_rho,std_rho");
    for (const auto& r : report.languages)
      for (const auto& [m, rho] : r.rho.per_round) p.row(r.lang, to_string(r.group), m, rho, r.rho.mean_rho, r.rho.std_rho);
    p.close();
  }
  for (const auto& r : report.languages) {
    {
      CsvWriter t(dir / ("trend_" + r.lang + ".csv"), "sample_size,value");
      for (std::size_t i = 0; i < r.trend.values.size(); ++i) t.row(r.trend.sample_sizes[i], r.trend.values[i]);
      t.close();
    }
    {
      CsvWriter f(dir / ("freq_" + r.lang + ".csv"), "rank,frequency");
      for (std::size_t i = 0; i < r.freq.freqs.size(); ++i) f.row(i + 1, r.freq.freqs[i]);
      f.close();
    }
    for (const auto& run : r.lm_runs) {
      CsvWriter c(dir / ("lm_curves_" + r.lang + "_" + std::to_string(run.run_id) + ".csv"), kLMCurveHeader);
      for (const auto& row : run.curve) c.row(row.step, row.split, row.loss, row.perplexity);
      c.close();
    }
  }
}

}  // namespace morphotok
