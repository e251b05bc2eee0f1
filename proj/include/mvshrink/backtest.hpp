#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mvshrink/core.hpp"
#include "mvshrink/frontier.hpp"
#include "mvshrink/io.hpp"
#include "mvshrink/rng.hpp"
#include "mvshrink/shrinkage.hpp"
#include "mvshrink/stats.hpp"
#include "mvshrink/types.hpp"

// Rolling-window out-of-sample evaluation. Each evaluation day re-estimates
// moments on the trailing window, forms the traditional, shrunk and target
// portfolios, and records the realized return w' y_t with no transaction
// costs. Per-day estimator failures become gaps rather than aborting a run.

namespace mvshrink {

struct ReturnsPanel {
  std::vector<std::string> dates;   // length T
  std::vector<std::string> assets;  // length p
  Matrix y;                         // p x T
};

struct FactorPanel {
  std::vector<std::string> dates;  // length T
  Matrix f;                        // k x T
};

namespace detail {

struct ParsedCsv {
  std::vector<std::string> header;
  std::vector<std::string> dates;
  Matrix values;  // columns x rows-of-file, i.e. (fields-1) x T
};

inline ParsedCsv parse_dated_csv(const std::string& path, const char* what) {
  const std::string text = read_text_file(path);
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(std::move(line));
    start = end + 1;
  }
  if (lines.size() < 2)
    throw IoError("csv_parse_error",
                  std::string(what) + " '" + path + "': need a header and data rows");

  ParsedCsv out;
  out.header = split_csv_line(lines[0]);
  if (out.header.size() < 2 || out.header[0] != "date")
    throw IoError("csv_parse_error",
                  std::string(what) + " '" + path +
                      "': header must start with 'date' and name at least one column");
  const std::size_t fields = out.header.size();
  const std::size_t t = lines.size() - 1;
  out.values.resize(static_cast<Index>(fields - 1), static_cast<Index>(t));
  out.dates.reserve(t);
  std::set<std::string> seen;
  for (std::size_t row = 0; row < t; ++row) {
    const auto cells = split_csv_line(lines[row + 1]);
    if (cells.size() != fields)
      throw IoError("csv_parse_error", std::string(what) + " '" + path + "' row " +
                                           std::to_string(row + 2) +
                                           ": expected " + std::to_string(fields) +
                                           " fields, got " +
                                           std::to_string(cells.size()));
    if (!seen.insert(cells[0]).second)
      throw IoError("csv_parse_error", std::string(what) + " '" + path + "' row " +
                                           std::to_string(row + 2) +
                                           ": duplicate date '" + cells[0] + "'");
    out.dates.push_back(cells[0]);
    for (std::size_t j = 1; j < fields; ++j)
      out.values(static_cast<Index>(j - 1), static_cast<Index>(row)) =
          parse_double_strict(cells[j], std::string(what) + " '" + path + "' row " +
                                            std::to_string(row + 2));
  }
  return out;
}

}  // namespace detail

// CSV format: header 'date,asset1,...'; one row per trading day.
inline ReturnsPanel load_returns_csv(const std::string& path) {
  auto parsed = detail::parse_dated_csv(path, "returns csv");
  ReturnsPanel panel;
  panel.dates = std::move(parsed.dates);
  panel.assets.assign(parsed.header.begin() + 1, parsed.header.end());
  panel.y = std::move(parsed.values);
  return panel;
}

// CSV format: header 'date,mkt,smb,hml'.
inline FactorPanel load_factors_csv(const std::string& path) {
  auto parsed = detail::parse_dated_csv(path, "factors csv");
  if (parsed.header.size() != 4)
    throw IoError("csv_parse_error",
                  "factors csv '" + path + "': expected exactly 3 factor columns");
  FactorPanel panel;
  panel.dates = std::move(parsed.dates);
  panel.f = std::move(parsed.values);
  return panel;
}

inline Vector target_equal_weight(int p) {
  require(p >= 1, "bad_dimension", "target_equal_weight: p must be >= 1");
  return Vector::Constant(p, 1.0 / static_cast<double>(p));
}

// GMV weights of the equicorrelation approximation of S: keep the sample
// variances, replace every correlation by the average sample correlation
// rbar and invert in closed form. Valid only for rbar in (-1/(p-1), 1).
inline Vector target_equal_correlation(const Matrix& s) {
  check_square_symmetric(s, "target_equal_correlation");
  const Index p = s.rows();
  if (p == 1) return Vector::Ones(1);
  Vector sd(p);
  for (Index i = 0; i < p; ++i) {
    require(s(i, i) > 0.0, "bad_covariance",
            "target_equal_correlation: diagonal must be strictly positive");
    sd[i] = std::sqrt(s(i, i));
  }
  double rbar = 0.0;
  for (Index i = 0; i < p; ++i)
    for (Index j = i + 1; j < p; ++j) rbar += s(i, j) / (sd[i] * sd[j]);
  rbar /= 0.5 * static_cast<double>(p) * static_cast<double>(p - 1);

  const double lo = -1.0 / static_cast<double>(p - 1);
  if (!(rbar > lo && rbar < 1.0))
    throw NumericError("equicorrelation_invalid",
                       "target_equal_correlation: average correlation outside (" +
                           format_double(lo) + ", 1)");

  // R = (1 - rbar) I + rbar 1 1'  =>  R^{-1} u = (u - shave * 1) / (1 - rbar)
  const Vector u = sd.cwiseInverse();
  const double shave = rbar * u.sum() / (1.0 - rbar + rbar * static_cast<double>(p));
  const Vector z = (u.array() - shave).matrix() / (1.0 - rbar);
  Vector b = u.cwiseProduct(z);  // D^{-1/2} R^{-1} D^{-1/2} 1
  return b / b.sum();
}

// GMV weights of a three-factor covariance model estimated on the window:
// per-asset OLS betas, Sigma = B Sigma_f B' + diag(residual variances), with
// the inverse taken through the Woodbury identity. Residual variances use the
// divisor n like every other second moment in the library.
inline Vector target_fama_french(const Matrix& y_win, const Matrix& f_win) {
  check_returns_shape(y_win, "target_fama_french");
  require(f_win.cols() == y_win.cols(), "shape_mismatch",
          "target_fama_french: returns and factors disagree on window length");
  require(f_win.allFinite(), "nonfinite_returns",
          "target_fama_french: factors contain non-finite entries");
  const Index k = f_win.rows();
  const Index n = y_win.cols();
  require(n > k + 1, "window_too_short",
          "target_fama_french: window must exceed the factor count plus one");

  const Matrix sf = sample_covariance(f_win);
  Eigen::LLT<Matrix> llt(sf);
  if (llt.info() != Eigen::Success)
    throw NumericError("factor_covariance_singular",
                       "target_fama_french: factor covariance is singular");

  const Vector ybar = y_win.rowwise().mean();
  const Vector fbar = f_win.rowwise().mean();
  const Matrix yc = y_win.colwise() - ybar;
  const Matrix fc = f_win.colwise() - fbar;
  const Matrix cyf = yc * fc.transpose() / static_cast<double>(n);  // p x k
  const Matrix betas = llt.solve(cyf.transpose()).transpose();      // p x k

  Vector resid(y_win.rows());
  for (Index i = 0; i < y_win.rows(); ++i) {
    const double total = yc.row(i).squaredNorm() / static_cast<double>(n);
    const double explained = betas.row(i).dot(cyf.row(i));
    resid[i] = total - explained;
    if (!(resid[i] > 1e-12 * std::max(total, 1e-300)))
      throw NumericError("degenerate_factor_fit",
                         "target_fama_french: residual variance vanished for an asset");
  }

  // Woodbury: Sigma^{-1} 1 = D^{-1}1 - D^{-1}B (Sf^{-1} + B'D^{-1}B)^{-1} B'D^{-1}1
  const Vector dinv_one = resid.cwiseInverse();
  const Matrix dinv_b = resid.cwiseInverse().asDiagonal() * betas;  // p x k
  Matrix core = llt.solve(Matrix::Identity(k, k)) + betas.transpose() * dinv_b;
  const Vector rhs = betas.transpose() * dinv_one;
  const Vector sol = core.ldlt().solve(rhs);
  Vector b = dinv_one - dinv_b * sol;
  const double total = b.sum();
  if (!(total > 0.0) || !std::isfinite(total))
    throw NumericError("gmv_denominator_degenerate",
                       "target_fama_french: 1' Sigma^{-1} 1 must be positive");
  return b / total;
}

// Point measures of one realized return series. The Sharpe ratio is left
// unset for a zero-variance series; everything else is still defined.
struct SeriesMeasures {
  double ce = 0.0;
  std::optional<double> sr;
  double var95 = 0.0;
  double var99 = 0.0;
  double es95 = 0.0;
  double es99 = 0.0;
};

// A constant series computed in floating point leaves the two-pass variance
// at rounding level rather than exactly zero, so degeneracy is judged against
// the series scale.
inline bool degenerate_variance(const std::vector<double>& r, double v) {
  double scale = 0.0;
  for (double x : r) scale = std::max(scale, std::abs(x));
  return !(std::sqrt(v) > 1e-12 * scale);
}

inline double sharpe_ratio(const std::vector<double>& r) {
  const double v = variance_pop(r);
  if (degenerate_variance(r, v))
    throw NumericError("zero_variance",
                       "sharpe_ratio: undefined for a zero-variance series");
  return mean_of(r) / std::sqrt(v);
}

inline SeriesMeasures series_measures(const std::vector<double>& r, double gamma) {
  require(gamma > 0.0, "bad_gamma", "series_measures: gamma must be positive");
  require(r.size() >= 20, "series_too_short",
          "series_measures: need at least 20 observations");
  for (double x : r)
    require(std::isfinite(x), "nonfinite_returns",
            "series_measures: non-finite realized return");
  SeriesMeasures m;
  const double v = variance_pop(r);
  m.ce = mean_of(r) - 0.5 * gamma * v;
  if (!degenerate_variance(r, v)) m.sr = mean_of(r) / std::sqrt(v);

  auto tail = [&r](double level, double& var_out, double& es_out) {
    var_out = quantile_type7(r, level);
    double acc = 0.0;
    int count = 0;
    for (double x : r)
      if (x <= var_out) {
        acc += x;
        ++count;
      }
    es_out = acc / static_cast<double>(count);  // lowest point always qualifies
  };
  tail(0.05, m.var95, m.es95);
  tail(0.01, m.var99, m.es99);
  return m;
}

// Cross-draw aggregation: trimmed means and medians for CE and SR, plain
// means for the tail measures. SR statistics skip draws where the ratio was
// undefined and stay unset when no draw had one.
struct PerformanceReport {
  double ce_mean = 0.0;
  double ce_median = 0.0;
  std::optional<double> sr_mean;
  std::optional<double> sr_median;
  double var95 = 0.0;
  double var99 = 0.0;
  double es95 = 0.0;
  double es99 = 0.0;
  double trim = 0.0;
  int draws = 0;
  int sr_draws = 0;
};

inline PerformanceReport aggregate_measures(const std::vector<SeriesMeasures>& per_draw,
                                            double trim) {
  require(!per_draw.empty(), "empty_sample", "aggregate_measures: no draws");
  PerformanceReport rep;
  rep.trim = trim;
  rep.draws = static_cast<int>(per_draw.size());
  std::vector<double> ce, sr, v95, v99, e95, e99;
  for (const auto& m : per_draw) {
    ce.push_back(m.ce);
    if (m.sr) sr.push_back(*m.sr);
    v95.push_back(m.var95);
    v99.push_back(m.var99);
    e95.push_back(m.es95);
    e99.push_back(m.es99);
  }
  rep.ce_mean = trimmed_mean(ce, trim);
  rep.ce_median = median_of(ce);
  rep.sr_draws = static_cast<int>(sr.size());
  if (!sr.empty()) {
    rep.sr_mean = trimmed_mean(sr, trim);
    rep.sr_median = median_of(sr);
  }
  rep.var95 = mean_of(v95);
  rep.var99 = mean_of(v99);
  rep.es95 = mean_of(e95);
  rep.es99 = mean_of(e99);
  return rep;
}

inline PerformanceReport performance_measures(const std::vector<double>& r,
                                              double gamma, double trim) {
  return aggregate_measures({series_measures(r, gamma)}, trim);
}

// Classical paired t test with the normal approximation for the two-sided
// 5 percent decision.
struct PairedTest {
  double t_stat = 0.0;
  double p_value = 1.0;
  bool significant_5pct = false;
  double mean_diff = 0.0;
};

inline PairedTest paired_comparison(const std::vector<double>& a,
                                    const std::vector<double>& b) {
  require(a.size() == b.size(), "shape_mismatch",
          "paired_comparison: samples must have equal length");
  require(a.size() >= 10, "series_too_short",
          "paired_comparison: need at least 10 pairs");
  const auto m = static_cast<double>(a.size());
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const double md = mean_of(d);
  double ss = 0.0;
  for (double x : d) ss += (x - md) * (x - md);
  const double sd = std::sqrt(ss / (m - 1.0));
  if (!(sd > 0.0)) {
    // Identical samples: difference is exactly zero, the test degenerates to
    // "no effect" rather than an error. A nonzero constant difference leaves
    // the statistic undefined.
    if (md == 0.0) return PairedTest{};
    throw NumericError("zero_variance",
                       "paired_comparison: differences have zero variance");
  }
  PairedTest out;
  out.mean_diff = md;
  out.t_stat = md / (sd / std::sqrt(m));
  out.p_value = 2.0 * (1.0 - normal_cdf(std::abs(out.t_stat)));
  out.significant_5pct = out.p_value < 0.05;
  return out;
}

enum class TargetChoice { EqualWeight, EqualCorrelation, FamaFrench };

inline const char* target_choice_name(TargetChoice t) {
  switch (t) {
    case TargetChoice::EqualWeight: return "equal_weight";
    case TargetChoice::EqualCorrelation: return "equal_correlation";
    case TargetChoice::FamaFrench: return "fama_french";
  }
  return "unknown";
}

struct BacktestConfig {
  int window = 0;
  int eval_days = 0;
  CalibrationMode mode;
  TargetChoice target = TargetChoice::EqualWeight;
};

// Realized daily returns of one strategy; day_index addresses eval_dates of
// the result, so gaps stay visible instead of silently compacting the series.
struct StrategySeries {
  std::vector<int> day_index;
  std::vector<double> returns;
  int gaps = 0;
};

struct BacktestResult {
  std::vector<std::string> eval_dates;
  double c_hat = 0.0;
  StrategySeries traditional;
  StrategySeries bona_fide;
  StrategySeries target;
};

inline void validate_backtest_config(const ReturnsPanel& panel,
                                     const std::optional<FactorPanel>& factors,
                                     const BacktestConfig& cfg) {
  require(panel.y.rows() >= 2, "bad_dimension", "backtest: need at least 2 assets");
  require(panel.y.cols() == static_cast<Index>(panel.dates.size()), "shape_mismatch",
          "backtest: dates and returns disagree on length");
  require(panel.y.allFinite(), "nonfinite_returns",
          "backtest: returns contain non-finite entries");
  require(cfg.window >= 2, "bad_window", "backtest: window must be >= 2");
  require(cfg.eval_days >= 1, "bad_window", "backtest: eval_days must be >= 1");
  require(panel.y.cols() >= cfg.window + cfg.eval_days, "window_misconfigured",
          "backtest: evaluation days overlap the first estimation window");
  require(cfg.mode.gamma > 0.0, "bad_gamma", "backtest: gamma must be positive");
  check_guard_band(static_cast<double>(panel.y.rows()) /
                       static_cast<double>(cfg.window),
                   "backtest");
  if (cfg.target == TargetChoice::FamaFrench) {
    require(factors.has_value(), "missing_factors",
            "backtest: fama_french target needs a factor panel");
    require(factors->dates == panel.dates, "factor_dates_mismatch",
            "backtest: factor dates must match the returns dates");
  }
}

inline BacktestResult rolling_backtest(const ReturnsPanel& panel,
                                       const std::optional<FactorPanel>& factors,
                                       const BacktestConfig& cfg) {
  validate_backtest_config(panel, factors, cfg);
  const Index p = panel.y.rows();
  const Index t_total = panel.y.cols();
  const Index first_eval = t_total - cfg.eval_days;
  const double c_hat =
      static_cast<double>(p) / static_cast<double>(cfg.window);

  BacktestResult res;
  res.c_hat = c_hat;
  res.eval_dates.assign(panel.dates.begin() + first_eval, panel.dates.end());

  for (Index t = first_eval; t < t_total; ++t) {
    const int day = static_cast<int>(t - first_eval);
    const auto y_win = panel.y.middleCols(t - cfg.window, cfg.window);
    const Vector y_today = panel.y.col(t);
    const Vector ybar = y_win.rowwise().mean();
    const Matrix s = sample_covariance(y_win);

    // Target first: the shrunk strategy needs it too.
    std::optional<Vector> b;
    try {
      switch (cfg.target) {
        case TargetChoice::EqualWeight:
          b = target_equal_weight(static_cast<int>(p));
          break;
        case TargetChoice::EqualCorrelation:
          b = target_equal_correlation(s);
          break;
        case TargetChoice::FamaFrench:
          b = target_fama_french(y_win, factors->f.middleCols(t - cfg.window,
                                                              cfg.window));
          break;
      }
    } catch (const Error&) {
      b.reset();
    }
    if (b) {
      res.target.day_index.push_back(day);
      res.target.returns.push_back(b->dot(y_today));
    } else {
      ++res.target.gaps;
    }

    std::optional<Matrix> inv_like;
    try {
      inv_like = (c_hat < 1.0) ? spd_inverse(s) : moore_penrose_pinv(s);
    } catch (const Error&) {
      inv_like.reset();
    }

    std::optional<Vector> w_trad;
    if (inv_like) {
      try {
        w_trad = sample_eu_weights(*inv_like, ybar, cfg.mode.gamma);
      } catch (const Error&) {
        w_trad.reset();
      }
    }
    if (w_trad) {
      res.traditional.day_index.push_back(day);
      res.traditional.returns.push_back(w_trad->dot(y_today));
    } else {
      ++res.traditional.gaps;
    }

    std::optional<Vector> w_bf;
    if (inv_like && w_trad && b) {
      try {
        const FrontierParams f_c =
            (c_hat < 1.0)
                ? consistent_frontier_lt1(plugin_frontier(ybar, *inv_like), c_hat)
                : consistent_frontier_gt1(*inv_like, ybar, c_hat);
        const TargetStats t_hat = target_stats(*b, ybar, s);
        const double alpha = bona_fide_alpha(f_c, t_hat, c_hat, cfg.mode);
        w_bf = gse_weights(alpha, *w_trad, *b);
      } catch (const Error&) {
        w_bf.reset();
      }
    }
    if (w_bf) {
      res.bona_fide.day_index.push_back(day);
      res.bona_fide.returns.push_back(w_bf->dot(y_today));
    } else {
      ++res.bona_fide.gaps;
    }
  }
  return res;
}

}  // namespace mvshrink
