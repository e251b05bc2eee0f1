#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mvshrink/backtest.hpp"
#include "mvshrink/core.hpp"
#include "mvshrink/io.hpp"
#include "mvshrink/rng.hpp"
#include "mvshrink/simulate.hpp"
#include "mvshrink/study.hpp"
#include "oracles.hpp"

using mvshrink::BacktestConfig;
using mvshrink::BacktestResult;
using mvshrink::Criterion;
using mvshrink::FactorPanel;
using mvshrink::IoError;
using mvshrink::Matrix;
using mvshrink::NumericError;
using mvshrink::ReturnsPanel;
using mvshrink::TargetChoice;
using mvshrink::ValidationError;
using mvshrink::Vector;

namespace {

std::filesystem::path tmp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

std::vector<std::string> synthetic_dates(int t) {
  std::vector<std::string> dates;
  dates.reserve(t);
  for (int i = 0; i < t; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "d%04d", i);
    dates.emplace_back(buf);
  }
  return dates;
}

ReturnsPanel synthetic_panel(const Vector& mu, const Matrix& sigma, int t,
                             std::uint64_t seed) {
  ReturnsPanel panel;
  panel.dates = synthetic_dates(t);
  for (int i = 0; i < mu.size(); ++i) panel.assets.push_back("a" + std::to_string(i));
  mvshrink::DgpSpec dgp;
  dgp.n = t;
  dgp.seed = seed;
  panel.y = mvshrink::generate_returns(mu, sigma, dgp);
  return panel;
}

std::string panel_to_csv(const ReturnsPanel& panel) {
  std::string out = "date";
  for (const auto& a : panel.assets) out += "," + a;
  out += '\n';
  for (int t = 0; t < panel.y.cols(); ++t) {
    out += panel.dates[static_cast<std::size_t>(t)];
    for (int i = 0; i < panel.y.rows(); ++i)
      out += "," + mvshrink::format_double(panel.y(i, t));
    out += '\n';
  }
  return out;
}

Matrix random_spd(int p, std::uint64_t seed) {
  std::mt19937_64 gen = mvshrink::make_stream(seed, 0, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(p, p);
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < p; ++i) g(i, j) = normal(gen);
  return Matrix(g * g.transpose()) + 0.5 * Matrix::Identity(p, p);
}

Matrix random_gaussian(int rows, int cols, std::mt19937_64& gen, double sd) {
  std::normal_distribution<double> normal(0.0, sd);
  Matrix m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = normal(gen);
  return m;
}

}  // namespace

TEST_CASE("returns csv loads a small file") {
  const auto path = tmp_file("mvshrink_smoke.csv");
  mvshrink::atomic_write_text(path,
                              "date,aaa,bbb\n"
                              "2020-01-02,0.01,0.02\n"
                              "2020-01-03,0.011,-0.005\n"
                              "2020-01-06,0.002,0.0\n");
  const ReturnsPanel panel = mvshrink::load_returns_csv(path.string());
  REQUIRE(panel.y.rows() == 2);
  REQUIRE(panel.y.cols() == 3);
  CHECK(panel.assets == std::vector<std::string>{"aaa", "bbb"});
  CHECK(panel.dates ==
        std::vector<std::string>{"2020-01-02", "2020-01-03", "2020-01-06"});
  CHECK(panel.y(0, 0) == 0.01);
  CHECK(panel.y(1, 1) == -0.005);
  CHECK(panel.y(1, 2) == 0.0);
}

TEST_CASE("returns csv errors name the offending row") {
  const auto path = tmp_file("mvshrink_bad.csv");

  mvshrink::atomic_write_text(path,
                              "date,aaa,bbb\n"
                              "2020-01-02,0.01,0.02\n"
                              "2020-01-03,,0.01\n");
  try {
    mvshrink::load_returns_csv(path.string());
    FAIL("blank cell must be rejected");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
  }

  mvshrink::atomic_write_text(path,
                              "date,aaa,bbb\n"
                              "2020-01-02,0.01\n");
  try {
    mvshrink::load_returns_csv(path.string());
    FAIL("ragged row must be rejected");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }

  mvshrink::atomic_write_text(path,
                              "date,aaa,bbb\n"
                              "2020-01-02,0.01,0.02\n"
                              "2020-01-02,0.03,0.04\n");
  try {
    mvshrink::load_returns_csv(path.string());
    FAIL("duplicate dates must be rejected");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
    CHECK(std::string(e.what()).find("duplicate") != std::string::npos);
  }

  mvshrink::atomic_write_text(path, "date,aaa,bbb\n2020-01-02,0.01,oops\n");
  CHECK_THROWS_AS(mvshrink::load_returns_csv(path.string()), IoError);

  mvshrink::atomic_write_text(path, "day,aaa\n2020-01-02,0.01\n");
  CHECK_THROWS_AS(mvshrink::load_returns_csv(path.string()), IoError);

  mvshrink::atomic_write_text(path, "date,aaa\n");
  CHECK_THROWS_AS(mvshrink::load_returns_csv(path.string()), IoError);

  CHECK_THROWS_AS(mvshrink::load_returns_csv(tmp_file("no_such_file.csv").string()),
                  IoError);
}

TEST_CASE("returns csv round-trips through write and read") {
  const Vector mu = mvshrink::make_means(3);
  const Matrix sigma = random_spd(3, 41) * 0.01;
  const ReturnsPanel panel = synthetic_panel(mu, sigma, 7, 42);

  const auto path = tmp_file("mvshrink_roundtrip.csv");
  mvshrink::atomic_write_text(path, panel_to_csv(panel));
  const ReturnsPanel back = mvshrink::load_returns_csv(path.string());

  REQUIRE(back.y.rows() == panel.y.rows());
  REQUIRE(back.y.cols() == panel.y.cols());
  CHECK(back.dates == panel.dates);
  CHECK(back.assets == panel.assets);
  CHECK((back.y - panel.y).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("factor csv requires exactly three factor columns") {
  const auto path = tmp_file("mvshrink_factors.csv");
  mvshrink::atomic_write_text(path,
                              "date,mkt,smb,hml\n"
                              "2020-01-02,0.01,0.002,-0.001\n"
                              "2020-01-03,-0.004,0.001,0.003\n");
  const FactorPanel f = mvshrink::load_factors_csv(path.string());
  REQUIRE(f.f.rows() == 3);
  REQUIRE(f.f.cols() == 2);
  CHECK(f.f(2, 1) == 0.003);

  mvshrink::atomic_write_text(path,
                              "date,mkt,smb\n"
                              "2020-01-02,0.01,0.002\n");
  CHECK_THROWS_AS(mvshrink::load_factors_csv(path.string()), IoError);
}

TEST_CASE("equal-weight target") {
  const Vector b4 = mvshrink::target_equal_weight(4);
  REQUIRE(b4.size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(b4[i] == 0.25);

  const Vector b1 = mvshrink::target_equal_weight(1);
  REQUIRE(b1.size() == 1);
  CHECK(b1[0] == 1.0);

  CHECK(std::abs(mvshrink::target_equal_weight(13).sum() - 1.0) < 1e-15);
  CHECK_THROWS_AS(mvshrink::target_equal_weight(0), ValidationError);
}

TEST_CASE("equal-correlation target reduces to inverse variance weights") {
  Matrix s = Matrix::Zero(4, 4);
  s.diagonal() << 1.0, 2.0, 4.0, 8.0;
  const Vector b = mvshrink::target_equal_correlation(s);
  Vector expect(4);
  expect << 8.0, 4.0, 2.0, 1.0;
  expect /= 15.0;
  CHECK((b - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("equal-correlation target splits two equal-variance assets evenly") {
  for (double r : {-0.9, 0.3, 0.95}) {
    Matrix s(2, 2);
    s << 4.0, 4.0 * r, 4.0 * r, 4.0;
    const Vector b = mvshrink::target_equal_correlation(s);
    CHECK(std::abs(b[0] - 0.5) < 1e-12);
    CHECK(std::abs(b[1] - 0.5) < 1e-12);
  }
}

TEST_CASE("equal-correlation target matches a dense inversion") {
  const int p = 5;
  const Matrix s = random_spd(p, 57);

  Vector sd(p);
  for (int i = 0; i < p; ++i) sd[i] = std::sqrt(s(i, i));
  double rbar = 0.0;
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j) rbar += s(i, j) / (sd[i] * sd[j]);
  rbar /= 0.5 * p * (p - 1);

  Matrix sigma_ec(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      sigma_ec(i, j) = (i == j) ? s(i, i) : rbar * sd[i] * sd[j];
  const Vector raw = sigma_ec.partialPivLu().solve(Vector::Ones(p));
  const Vector expect = raw / raw.sum();

  const Vector b = mvshrink::target_equal_correlation(s);
  CHECK((b - expect).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("equal-correlation target rejects averages outside the definite range") {
  Matrix low = Matrix::Identity(3, 3);
  low(0, 1) = low(1, 0) = low(0, 2) = low(2, 0) = low(1, 2) = low(2, 1) = -0.6;
  CHECK_THROWS_AS(mvshrink::target_equal_correlation(low), NumericError);

  Matrix high = Matrix::Ones(3, 3);
  CHECK_THROWS_AS(mvshrink::target_equal_correlation(high), NumericError);

  Matrix bad_diag = Matrix::Identity(2, 2);
  bad_diag(1, 1) = 0.0;
  CHECK_THROWS_AS(mvshrink::target_equal_correlation(bad_diag), ValidationError);
}

TEST_CASE("factor target recovers a pure first-factor loading") {
  const int p = 6;
  const int n = 240;
  std::mt19937_64 gen = mvshrink::make_stream(61, 0, 0);
  Matrix f(3, n);
  f.row(0) = random_gaussian(1, n, gen, 0.14);
  f.row(1) = random_gaussian(1, n, gen, 0.10);
  f.row(2) = random_gaussian(1, n, gen, 0.07);
  Matrix y(p, n);
  for (int i = 0; i < p; ++i)
    y.row(i) = f.row(0) + random_gaussian(1, n, gen, 0.05);

  const Matrix betas = oracles::regression_slopes(y, f);
  for (int i = 0; i < p; ++i) {
    CHECK(std::abs(betas(i, 0) - 1.0) < 0.15);
    CHECK(std::abs(betas(i, 1)) < 0.15);
    CHECK(std::abs(betas(i, 2)) < 0.15);
  }

  // Dense reconstruction of the factor covariance model, inverted directly.
  const Matrix sf = oracles::centering_covariance(f);
  const Vector ybar = y.rowwise().mean();
  const Vector fbar = f.rowwise().mean();
  const Matrix yc = y.colwise() - ybar;
  const Matrix fc = f.colwise() - fbar;
  const Matrix resid = yc - betas * fc;
  Matrix sigma_ff = betas * sf * betas.transpose();
  for (int i = 0; i < p; ++i)
    sigma_ff(i, i) += resid.row(i).squaredNorm() / static_cast<double>(n);
  const Vector raw = sigma_ff.partialPivLu().solve(Vector::Ones(p));
  const Vector expect = raw / raw.sum();

  const Vector b = mvshrink::target_fama_french(y, f);
  REQUIRE(b.size() == p);
  CHECK(std::abs(b.sum() - 1.0) < 1e-12);
  CHECK((b - expect).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("factor target rejects degenerate panels") {
  const int p = 4;
  const int n = 30;
  std::mt19937_64 gen = mvshrink::make_stream(62, 0, 0);
  const Matrix good_f = random_gaussian(3, n, gen, 0.1);
  const Matrix y = random_gaussian(p, n, gen, 0.2);

  Matrix flat_f = good_f;
  flat_f.row(1).setConstant(0.004);
  flat_f.row(2).setConstant(-0.001);
  CHECK_THROWS_AS(mvshrink::target_fama_french(y, flat_f), NumericError);

  // Exact factor structure leaves no residual variance.
  Matrix loads(p, 3);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < p; ++i)
    for (int k = 0; k < 3; ++k) loads(i, k) = normal(gen);
  const Matrix exact_y = loads * good_f;
  CHECK_THROWS_AS(mvshrink::target_fama_french(exact_y, good_f), NumericError);

  // Window must exceed the factor count plus one.
  CHECK_THROWS_AS(mvshrink::target_fama_french(y.leftCols(4), good_f.leftCols(4)),
                  ValidationError);
  CHECK_THROWS_AS(mvshrink::target_fama_french(y, good_f.leftCols(n - 1)),
                  ValidationError);
}

TEST_CASE("factor target beats equal weights toward the true minimum variance") {
  const int p = 10;
  const int n = 60;
  std::mt19937_64 setup = mvshrink::make_stream(63, 0, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix loads(p, 3);
  for (int i = 0; i < p; ++i) {
    loads(i, 0) = 1.0 + 0.5 * normal(setup);
    loads(i, 1) = 0.5 * normal(setup);
    loads(i, 2) = 0.5 * normal(setup);
  }
  Vector fsd(3);
  fsd << 0.14, 0.10, 0.07;
  Vector esd(p);
  for (int i = 0; i < p; ++i) esd[i] = 0.05 + 0.015 * static_cast<double>(i);

  Matrix sigma = loads * fsd.cwiseAbs2().asDiagonal() * loads.transpose();
  sigma += Matrix(esd.cwiseAbs2().asDiagonal());
  const Vector raw = sigma.partialPivLu().solve(Vector::Ones(p));
  const Vector w_true = raw / raw.sum();
  const Vector b_ew = mvshrink::target_equal_weight(p);

  int wins = 0;
  for (int rep = 0; rep < 100; ++rep) {
    std::mt19937_64 gen = mvshrink::make_stream(63, 1, static_cast<std::uint64_t>(rep));
    Matrix f(3, n);
    for (int k = 0; k < 3; ++k) f.row(k) = random_gaussian(1, n, gen, fsd[k]);
    Matrix y = loads * f;
    for (int i = 0; i < p; ++i) y.row(i) += random_gaussian(1, n, gen, esd[i]);
    const Vector b_ff = mvshrink::target_fama_french(y, f);
    if ((b_ff - w_true).norm() < (b_ew - w_true).norm()) ++wins;
  }
  CHECK(wins >= 80);
}

TEST_CASE("performance measures of a constant series") {
  const std::vector<double> r(30, 0.01);
  const auto rep = mvshrink::performance_measures(r, 1.0, 0.10);
  CHECK(rep.ce_mean == Catch::Approx(0.01).margin(1e-15));
  CHECK(rep.ce_median == Catch::Approx(0.01).margin(1e-15));
  CHECK(rep.var95 == Catch::Approx(0.01).margin(1e-15));
  CHECK(rep.es95 == Catch::Approx(0.01).margin(1e-15));
  CHECK(rep.var99 == Catch::Approx(0.01).margin(1e-15));
  CHECK(rep.es99 == Catch::Approx(0.01).margin(1e-15));
  CHECK_FALSE(rep.sr_mean.has_value());
  CHECK(rep.sr_draws == 0);
  CHECK(rep.draws == 1);
  CHECK_THROWS_AS(mvshrink::sharpe_ratio(r), NumericError);
}

TEST_CASE("tail quantiles match a sort-and-index rule") {
  std::vector<double> r(100);
  for (int i = 0; i < 100; ++i) r[static_cast<std::size_t>(i)] = 0.001 * (i + 1);
  const auto m = mvshrink::series_measures(r, 2.0);

  CHECK(m.var95 == Catch::Approx(oracles::sorted_quantile(r, 0.05)).margin(1e-15));
  CHECK(m.var99 == Catch::Approx(oracles::sorted_quantile(r, 0.01)).margin(1e-15));
  // Position 0.05 * 99 = 4.95 interpolates between the 5th and 6th smallest.
  CHECK(m.var95 == Catch::Approx(0.00595).margin(1e-12));
  CHECK(m.var99 == Catch::Approx(0.00199).margin(1e-12));
  CHECK(m.es95 == Catch::Approx(0.003).margin(1e-12));
  CHECK(m.es99 == Catch::Approx(0.001).margin(1e-12));
  CHECK(m.es95 <= m.var95);
  CHECK(m.es99 <= m.var99);
  CHECK(m.var99 <= m.var95);

  const double mean = 0.001 * 50.5;
  double ss = 0.0;
  for (double x : r) ss += (x - mean) * (x - mean);
  CHECK(m.ce == Catch::Approx(mean - 0.5 * 2.0 * ss / 100.0).margin(1e-15));
  REQUIRE(m.sr.has_value());
  CHECK(*m.sr == Catch::Approx(mean / std::sqrt(ss / 100.0)).margin(1e-12));
}

TEST_CASE("trimmed mean drops the requested tail fraction") {
  std::vector<double> ten;
  for (int i = 1; i <= 10; ++i) ten.push_back(static_cast<double>(i));
  CHECK(mvshrink::trimmed_mean(ten, 0.2) == Catch::Approx(5.5).margin(1e-15));

  const std::vector<double> skew = {1.0, 2.0, 3.0, 4.0, 100.0};
  CHECK(mvshrink::trimmed_mean(skew, 0.4) == Catch::Approx(3.0).margin(1e-15));
  CHECK(mvshrink::trimmed_mean(skew, 0.0) == Catch::Approx(22.0).margin(1e-15));
}

TEST_CASE("series measures reject bad input") {
  const std::vector<double> short_series(19, 0.01);
  CHECK_THROWS_AS(mvshrink::series_measures(short_series, 1.0), ValidationError);

  std::vector<double> bad(30, 0.01);
  bad[7] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(mvshrink::series_measures(bad, 1.0), ValidationError);

  const std::vector<double> ok(30, 0.01);
  CHECK_THROWS_AS(mvshrink::series_measures(ok, 0.0), ValidationError);
}

TEST_CASE("tail orderings hold on a random series") {
  std::mt19937_64 gen = mvshrink::make_stream(64, 0, 0);
  std::normal_distribution<double> normal(0.0, 0.02);
  std::vector<double> r(200);
  for (auto& x : r) x = normal(gen);
  const auto m = mvshrink::series_measures(r, 3.0);
  CHECK(m.es95 <= m.var95 + 1e-15);
  CHECK(m.es99 <= m.var99 + 1e-15);
  CHECK(m.var99 <= m.var95 + 1e-15);
}

TEST_CASE("rolling backtest matches an independent daily recomputation") {
  const int p = 5;
  const int window = 25;
  const int eval_days = 30;
  const int t_total = 60;

  mvshrink::SpectrumSpec spec;
  spec.p = p;
  spec.condition_index = 10.0;
  spec.rotate = true;
  spec.rotation_seed = 77;
  const Matrix sigma = mvshrink::make_covariance(spec);
  const Vector mu = 0.1 * mvshrink::make_means(p);
  const ReturnsPanel panel = synthetic_panel(mu, sigma, t_total, 501);

  BacktestConfig cfg;
  cfg.window = window;
  cfg.eval_days = eval_days;
  cfg.mode.criterion = Criterion::MeanVariance;
  cfg.mode.gamma = 1.0;
  cfg.target = TargetChoice::EqualWeight;

  const BacktestResult res = mvshrink::rolling_backtest(panel, std::nullopt, cfg);
  CHECK(res.c_hat == Catch::Approx(0.2).margin(1e-15));
  REQUIRE(res.eval_dates.size() == static_cast<std::size_t>(eval_days));
  CHECK(res.eval_dates.front() == panel.dates[static_cast<std::size_t>(t_total - eval_days)]);
  CHECK(res.traditional.gaps == 0);
  CHECK(res.target.gaps == 0);
  CHECK(res.bona_fide.day_index.size() + static_cast<std::size_t>(res.bona_fide.gaps) ==
        static_cast<std::size_t>(eval_days));

  const int first_eval = t_total - eval_days;
  auto dot_by_loop = [](const Vector& w, const Vector& y) {
    double acc = 0.0;
    for (int i = 0; i < w.size(); ++i) acc += w[i] * y[i];
    return acc;
  };

  for (std::size_t k = 0; k < res.traditional.day_index.size(); ++k) {
    const int t = first_eval + res.traditional.day_index[k];
    const Matrix win = panel.y.middleCols(t - window, window);
    const Vector ybar = win.rowwise().mean();
    const Matrix sinv = mvshrink::spd_inverse(mvshrink::sample_covariance(win));
    const Vector w = mvshrink::sample_eu_weights(sinv, ybar, cfg.mode.gamma);
    CHECK(std::abs(w.sum() - 1.0) < 1e-9);
    CHECK(std::abs(dot_by_loop(w, panel.y.col(t)) - res.traditional.returns[k]) < 1e-12);
  }
  for (std::size_t k = 0; k < res.target.day_index.size(); ++k) {
    const int t = first_eval + res.target.day_index[k];
    const Vector b = mvshrink::target_equal_weight(p);
    CHECK(std::abs(b.sum() - 1.0) < 1e-15);
    CHECK(std::abs(dot_by_loop(b, panel.y.col(t)) - res.target.returns[k]) < 1e-12);
  }
  for (std::size_t k = 0; k < res.bona_fide.day_index.size(); ++k) {
    const int t = first_eval + res.bona_fide.day_index[k];
    const Matrix win = panel.y.middleCols(t - window, window);
    const Vector ybar = win.rowwise().mean();
    const Matrix s = mvshrink::sample_covariance(win);
    const Matrix sinv = mvshrink::spd_inverse(s);
    const Vector w_s = mvshrink::sample_eu_weights(sinv, ybar, cfg.mode.gamma);
    const Vector b = mvshrink::target_equal_weight(p);
    const auto f_c = mvshrink::consistent_frontier_lt1(
        mvshrink::plugin_frontier(ybar, sinv), res.c_hat);
    const auto t_hat = mvshrink::target_stats(b, ybar, s);
    const double alpha = mvshrink::bona_fide_alpha(f_c, t_hat, res.c_hat, cfg.mode);
    const Vector w = mvshrink::gse_weights(alpha, w_s, b);
    CHECK(std::abs(w.sum() - 1.0) < 1e-9);
    CHECK(std::abs(dot_by_loop(w, panel.y.col(t)) - res.bona_fide.returns[k]) < 1e-12);
  }
}

TEST_CASE("rolling backtest is deterministic") {
  const int p = 4;
  const Matrix sigma = random_spd(p, 66) * 0.01;
  const Vector mu = 0.05 * mvshrink::make_means(p);
  const ReturnsPanel panel = synthetic_panel(mu, sigma, 50, 502);

  BacktestConfig cfg;
  cfg.window = 20;
  cfg.eval_days = 25;
  cfg.mode.gamma = 2.0;
  cfg.target = TargetChoice::EqualCorrelation;

  const BacktestResult a = mvshrink::rolling_backtest(panel, std::nullopt, cfg);
  const BacktestResult b = mvshrink::rolling_backtest(panel, std::nullopt, cfg);
  REQUIRE(a.traditional.returns.size() == b.traditional.returns.size());
  CHECK(a.traditional.returns == b.traditional.returns);
  CHECK(a.bona_fide.returns == b.bona_fide.returns);
  CHECK(a.target.returns == b.target.returns);
  CHECK(a.target.gaps == 0);
}

TEST_CASE("singular regime runs on the pseudo-inverse path") {
  const int p = 12;
  const int window = 6;
  const int eval_days = 25;
  const int t_total = 40;
  const Matrix sigma = Matrix::Identity(p, p) * 0.04;
  const Vector mu = 0.05 * mvshrink::make_means(p);
  const ReturnsPanel panel = synthetic_panel(mu, sigma, t_total, 503);

  BacktestConfig cfg;
  cfg.window = window;
  cfg.eval_days = eval_days;
  cfg.mode.gamma = 1.0;
  cfg.target = TargetChoice::EqualWeight;

  const BacktestResult res = mvshrink::rolling_backtest(panel, std::nullopt, cfg);
  CHECK(res.c_hat == Catch::Approx(2.0).margin(1e-15));
  REQUIRE_FALSE(res.traditional.returns.empty());

  const int first_eval = t_total - eval_days;
  for (std::size_t k = 0; k < res.traditional.day_index.size(); ++k) {
    const int t = first_eval + res.traditional.day_index[k];
    const Matrix win = panel.y.middleCols(t - window, window);
    const Vector ybar = win.rowwise().mean();
    const Matrix pinv = mvshrink::moore_penrose_pinv(mvshrink::sample_covariance(win));
    const Vector w = mvshrink::sample_eu_weights(pinv, ybar, cfg.mode.gamma);
    CHECK(std::abs(w.sum() - 1.0) < 1e-9);
    double acc = 0.0;
    for (int i = 0; i < p; ++i) acc += w[i] * panel.y(i, t);
    CHECK(std::abs(acc - res.traditional.returns[k]) < 1e-12);
  }
}

TEST_CASE("rolling backtest validates its configuration") {
  const int p = 5;
  const Matrix sigma = random_spd(p, 67) * 0.01;
  const Vector mu = Vector::Zero(p);
  const ReturnsPanel panel = synthetic_panel(mu, sigma, 30, 504);

  BacktestConfig cfg;
  cfg.window = 25;
  cfg.eval_days = 10;
  CHECK_THROWS_AS(mvshrink::rolling_backtest(panel, std::nullopt, cfg),
                  ValidationError);  // 25 + 10 > 30

  cfg.window = 20;
  cfg.eval_days = 0;
  CHECK_THROWS_AS(mvshrink::rolling_backtest(panel, std::nullopt, cfg),
                  ValidationError);

  cfg.eval_days = 10;
  cfg.mode.gamma = 0.0;
  CHECK_THROWS_AS(mvshrink::rolling_backtest(panel, std::nullopt, cfg),
                  ValidationError);

  cfg.mode.gamma = 1.0;
  cfg.window = p;  // concentration lands on 1 exactly
  CHECK_THROWS_AS(mvshrink::rolling_backtest(panel, std::nullopt, cfg),
                  NumericError);

  cfg.window = 20;
  cfg.target = TargetChoice::FamaFrench;
  CHECK_THROWS_AS(mvshrink::rolling_backtest(panel, std::nullopt, cfg),
                  ValidationError);

  FactorPanel factors;
  factors.dates = panel.dates;
  factors.dates[3] = "mismatch";
  std::mt19937_64 gen = mvshrink::make_stream(68, 0, 0);
  factors.f = random_gaussian(3, 30, gen, 0.1);
  CHECK_THROWS_AS(mvshrink::rolling_backtest(panel, factors, cfg), ValidationError);

  factors.dates = panel.dates;
  const BacktestResult res = mvshrink::rolling_backtest(panel, factors, cfg);
  CHECK(res.target.day_index.size() + static_cast<std::size_t>(res.target.gaps) ==
        static_cast<std::size_t>(cfg.eval_days));
}

TEST_CASE("shrunk strategy dominates the plain one on average") {
  const int p = 10;
  const int window = 50;
  const int eval_days = 30;
  const int t_total = 80;
  const int panels = 50;

  mvshrink::SpectrumSpec spec;
  spec.p = p;
  spec.condition_index = 10.0;
  spec.rotate = true;
  spec.rotation_seed = 88;
  const Matrix sigma = mvshrink::make_covariance(spec);
  const Vector mu = 0.1 * mvshrink::make_means(p);

  BacktestConfig cfg;
  cfg.window = window;
  cfg.eval_days = eval_days;
  cfg.mode.criterion = Criterion::MeanVariance;
  cfg.mode.gamma = 1.0;
  cfg.target = TargetChoice::EqualWeight;

  double ce_trad = 0.0;
  double ce_bf = 0.0;
  int used = 0;
  for (int rep = 0; rep < panels; ++rep) {
    const ReturnsPanel panel =
        synthetic_panel(mu, sigma, t_total, 600 + static_cast<std::uint64_t>(rep));
    const BacktestResult res = mvshrink::rolling_backtest(panel, std::nullopt, cfg);
    if (res.traditional.returns.size() < 20 || res.bona_fide.returns.size() < 20)
      continue;
    ce_trad += mvshrink::series_measures(res.traditional.returns, cfg.mode.gamma).ce;
    ce_bf += mvshrink::series_measures(res.bona_fide.returns, cfg.mode.gamma).ce;
    ++used;
  }
  REQUIRE(used >= 45);
  CHECK(ce_bf / used >= ce_trad / used);
}

TEST_CASE("paired comparison handles degenerate and shifted samples") {
  std::mt19937_64 gen = mvshrink::make_stream(69, 0, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> b(100);
  for (auto& x : b) x = normal(gen);

  const auto same = mvshrink::paired_comparison(b, b);
  CHECK(same.t_stat == 0.0);
  CHECK(same.p_value == 1.0);
  CHECK_FALSE(same.significant_5pct);

  std::vector<double> shifted = b;
  for (auto& x : shifted) x += 1.0;
  const auto shift = mvshrink::paired_comparison(shifted, b);
  CHECK(shift.significant_5pct);
  CHECK(std::abs(shift.t_stat) > 10.0);
  CHECK(shift.mean_diff == Catch::Approx(1.0).margin(1e-9));

  const std::vector<double> flat_a(20, 1.5);
  const std::vector<double> flat_b(20, 0.5);
  CHECK_THROWS_AS(mvshrink::paired_comparison(flat_a, flat_b), NumericError);

  const std::vector<double> nine(9, 0.0);
  CHECK_THROWS_AS(mvshrink::paired_comparison(nine, nine), ValidationError);
  CHECK_THROWS_AS(mvshrink::paired_comparison(b, std::vector<double>(99, 0.0)),
                  ValidationError);
}

TEST_CASE("paired comparison holds its size under the null") {
  const int trials = 1000;
  const int pairs = 1000;
  int rejections = 0;
  for (int trial = 0; trial < trials; ++trial) {
    std::mt19937_64 gen = mvshrink::make_stream(70, 0, static_cast<std::uint64_t>(trial));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> a(pairs), b(pairs);
    for (int i = 0; i < pairs; ++i) {
      a[static_cast<std::size_t>(i)] = normal(gen);
      b[static_cast<std::size_t>(i)] = normal(gen);
    }
    if (mvshrink::paired_comparison(a, b).significant_5pct) ++rejections;
  }
  const double rate = static_cast<double>(rejections) / trials;
  CHECK(rate >= 0.035);
  CHECK(rate <= 0.065);
}

TEST_CASE("target weights are scale invariant") {
  const int p = 6;
  const int n = 40;
  std::mt19937_64 gen = mvshrink::make_stream(71, 0, 0);
  const Matrix f = random_gaussian(3, n, gen, 0.1);
  Matrix y = random_gaussian(p, n, gen, 0.05);
  for (int i = 0; i < p; ++i) y.row(i) += (0.8 + 0.1 * i) * f.row(0);

  const Matrix s = mvshrink::sample_covariance(y);
  const Matrix s_scaled = mvshrink::sample_covariance(Matrix(2.5 * y));
  CHECK((mvshrink::target_equal_correlation(s) -
         mvshrink::target_equal_correlation(s_scaled))
            .cwiseAbs()
            .maxCoeff() < 1e-10);

  CHECK((mvshrink::target_fama_french(y, f) -
         mvshrink::target_fama_french(Matrix(2.5 * y), Matrix(2.5 * f)))
            .cwiseAbs()
            .maxCoeff() < 1e-10);
}

TEST_CASE("study aggregates cells, draws and paired tests") {
  const int p = 6;
  const int t_total = 60;
  const Matrix sigma = random_spd(p, 72) * 0.01;
  const Vector mu = 0.05 * mvshrink::make_means(p);
  const ReturnsPanel panel = synthetic_panel(mu, sigma, t_total, 505);

  mvshrink::StudyConfig cfg;
  cfg.c_targets = {0.3};
  cfg.base.eval_days = 25;
  cfg.base.mode.gamma = 1.5;
  cfg.base.target = TargetChoice::EqualWeight;
  cfg.subset_size = 0;
  cfg.num_draws = 1;
  cfg.seed = 11;

  const auto res = mvshrink::run_backtest_study(panel, std::nullopt, cfg);
  REQUIRE(res.cells.size() == 1);
  const auto& cell = res.cells[0];
  CHECK(cell.window == 20);  // p / c
  REQUIRE(cell.strategies.count("traditional") == 1);
  REQUIRE(cell.strategies.count("bona_fide") == 1);
  REQUIRE(cell.strategies.count("target") == 1);
  const auto& trad = cell.strategies.at("traditional");
  CHECK(trad.draws_used + trad.draws_dropped == 1);
  CHECK(cell.ce_tests.empty());  // a single draw cannot feed a paired test

  int expected_rows = 0;
  for (const auto& [name, st] : cell.strategies)
    expected_rows += cfg.base.eval_days * (st.draws_used + st.draws_dropped) -
                     st.total_gaps;
  CHECK(res.per_day.size() == static_cast<std::size_t>(expected_rows));

  const std::string csv = mvshrink::per_day_records_to_csv(res.per_day);
  CHECK(csv.rfind("c,draw,date,strategy,value\n", 0) == 0);

  // Resampled subsets: distinct draws, deterministic given the seed.
  mvshrink::StudyConfig sub = cfg;
  sub.subset_size = 4;
  sub.num_draws = 3;
  const auto res_a = mvshrink::run_backtest_study(panel, std::nullopt, sub);
  const auto res_b = mvshrink::run_backtest_study(panel, std::nullopt, sub);
  REQUIRE(res_a.cells.size() == 1);
  const auto& sa = res_a.cells[0].strategies.at("target");
  CHECK(sa.draws_used + sa.draws_dropped == 3);
  CHECK(res_a.cells[0].window == 13);  // round(4 / 0.3)
  REQUIRE(res_a.per_day.size() == res_b.per_day.size());
  for (std::size_t i = 0; i < res_a.per_day.size(); ++i) {
    CHECK(res_a.per_day[i].value == res_b.per_day[i].value);
    CHECK(res_a.per_day[i].strategy == res_b.per_day[i].strategy);
  }
}
