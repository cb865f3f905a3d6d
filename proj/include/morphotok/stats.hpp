#pragma once

// Log-log OLS for rank-frequency decay, Welch / pooled unpaired t-tests with
// Bonferroni adjustment, and one-way ANOVA.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "morphotok/common.hpp"
#include "morphotok/distributions.hpp"
#include "morphotok/metrics.hpp"

namespace morphotok {

struct RegressionFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r = 0.0;
  double r_squared = 0.0;
  std::size_t n = 0;
  bool degenerate = false;  // zero variance in y: r and R^2 reported as 0
};

// Simple least squares of y on x, computed on centred sums.
inline RegressionFit ols(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("ols: x and y differ in length");
  if (x.size() < 2) throw Error("ols: need at least 2 points");
  const double mx = mean(x), my = mean(y);
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0) throw Error("ols: x has zero variance");

  RegressionFit fit;
  fit.n = x.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (syy == 0.0) {
    fit.degenerate = true;
    return fit;
  }
  fit.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  double ss_res = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (fit.intercept + fit.slope * x[i]);
    ss_res += e * e;
  }
  fit.r_squared = std::max(0.0, 1.0 - ss_res / syy);
  return fit;
}

// Regresses log10 f(i) on log10 i over ranks 1..min(top_n, curve length).
inline RegressionFit ols_loglog(const FrequencyCurve& curve, std::size_t top_n = kDefaultTopN) {
  if (top_n < 2) throw Error("ols_loglog: top_n must be >= 2");
  const std::size_t n = std::min(top_n, curve.freqs.size());
  if (n < 2) throw Error("ols_loglog: curve has fewer than 2 points");
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(curve.freqs[i] > 0.0)) throw Error("ols_loglog: zero frequency at rank " + std::to_string(i + 1));
    x[i] = std::log10(static_cast<double>(i + 1));
    y[i] = std::log10(curve.freqs[i]);
  }
  return ols(x, y);
}

enum class TestMethod { welch_t, pooled_t, anova_f };

inline const char* to_string(TestMethod m) {
  switch (m) {
    case TestMethod::welch_t: return "welch_t";
    case TestMethod::pooled_t: return "pooled_t";
    case TestMethod::anova_f: return "anova_f";
  }
  return "?";
}

struct TestResult {
  TestMethod method = TestMethod::welch_t;
  double statistic = 0.0;
  double p_value = 1.0;
  double p_adjusted = 1.0;
  double df = 0.0;   // t df, or between-groups df for F
  double df2 = 0.0;  // within-groups df for F; 0 for t
  std::size_t family_size = 1;
};

inline double bonferroni(double p, std::size_t family_size) {
  if (family_size == 0) throw Error("bonferroni: family size must be >= 1");
  return std::min(1.0, p * static_cast<double>(family_size));
}

namespace detail {

inline double sample_variance(std::span<const double> xs) {
  const double s = sample_stddev(xs);
  return s * s;
}

inline void check_two_samples(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw Error("t-test: each sample needs at least 2 values");
}

// Zero standard error: identical means give t = 0, p = 1; otherwise t is infinite, p = 0.
inline bool degenerate_t(double diff, double se2, TestResult& r) {
  if (se2 > 0.0) return false;
  r.statistic = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
  r.p_value = diff == 0.0 ? 1.0 : 0.0;
  return true;
}

}  // namespace detail

inline TestResult welch_t_test(std::span<const double> a, std::span<const double> b, std::size_t family_size = 1) {
  detail::check_two_samples(a, b);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double va = detail::sample_variance(a) / na, vb = detail::sample_variance(b) / nb;
  const double diff = mean(a) - mean(b);

  TestResult r;
  r.method = TestMethod::welch_t;
  r.family_size = family_size;
  const double se2 = va + vb;
  if (!detail::degenerate_t(diff, se2, r)) {
    r.statistic = diff / std::sqrt(se2);
    r.df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    r.p_value = dist::student_t_two_sided(r.statistic, r.df);
  } else {
    r.df = na + nb - 2.0;
  }
  r.p_adjusted = bonferroni(r.p_value, family_size);
  return r;
}

inline TestResult pooled_t_test(std::span<const double> a, std::span<const double> b, std::size_t family_size = 1) {
  detail::check_two_samples(a, b);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double df = na + nb - 2.0;
  const double sp2 = ((na - 1.0) * detail::sample_variance(a) + (nb - 1.0) * detail::sample_variance(b)) / df;
  const double diff = mean(a) - mean(b);

  TestResult r;
  r.method = TestMethod::pooled_t;
  r.family_size = family_size;
  r.df = df;
  const double se2 = sp2 * (1.0 / na + 1.0 / nb);
  if (!detail::degenerate_t(diff, se2, r)) {
    r.statistic = diff / std::sqrt(se2);
    r.p_value = dist::student_t_two_sided(r.statistic, df);
  }
  r.p_adjusted = bonferroni(r.p_value, family_size);
  return r;
}

// Welch or pooled two-sample test selected at run time.
inline TestResult two_sample_test(std::span<const double> a, std::span<const double> b, std::size_t family_size,
                                  TestMethod method) {
  switch (method) {
    case TestMethod::welch_t: return welch_t_test(a, b, family_size);
    case TestMethod::pooled_t: return pooled_t_test(a, b, family_size);
    case TestMethod::anova_f: break;
  }
  throw Error("two_sample_test: method must be welch_t or pooled_t");
}

inline TestResult one_way_anova(const std::vector<std::vector<double>>& groups, std::size_t family_size = 1) {
  if (groups.size() < 2) throw Error("anova: need at least 2 groups");
  std::size_t total_n = 0;
  double grand = 0.0;
  for (const auto& g : groups) {
    if (g.size() < 2) throw Error("anova: each group needs at least 2 values");
    total_n += g.size();
    for (double v : g) grand += v;
  }
  grand /= static_cast<double>(total_n);

  double ss_between = 0.0, ss_within = 0.0;
  for (const auto& g : groups) {
    const double m = mean(g);
    ss_between += static_cast<double>(g.size()) * (m - grand) * (m - grand);
    for (double v : g) ss_within += (v - m) * (v - m);
  }

  TestResult r;
  r.method = TestMethod::anova_f;
  r.family_size = family_size;
  r.df = static_cast<double>(groups.size() - 1);
  r.df2 = static_cast<double>(total_n - groups.size());
  if (ss_within == 0.0) {
    r.statistic = ss_between == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    r.p_value = ss_between == 0.0 ? 1.0 : 0.0;
  } else {
    r.statistic = (ss_between / r.df) / (ss_within / r.df2);
    r.p_value = dist::f_survival(r.statistic, r.df, r.df2);
  }
  r.p_adjusted = bonferroni(r.p_value, family_size);
  return r;
}

}  // namespace morphotok
