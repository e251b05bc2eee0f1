#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mvshrink/core.hpp"
#include "mvshrink/frontier.hpp"
#include "mvshrink/io.hpp"
#include "mvshrink/loss.hpp"
#include "mvshrink/rng.hpp"
#include "mvshrink/shrinkage.hpp"
#include "mvshrink/simulate.hpp"
#include "mvshrink/stats.hpp"
#include "mvshrink/threading.hpp"

// Monte Carlo sweep over a concentration grid: for each cell (c, mode) it
// simulates returns panels, forms the plain sample estimator, the
// oracle-shrunk and the fully data-driven shrunk portfolios plus the fixed
// target, and records realized relative losses next to their closed-form
// limits. Above c = 1 the traditional and oracle-shrunk strategies use the
// true-covariance generalized inverse (the quantity the limit describes)
// while the bona fide strategy stays on the Moore-Penrose path.

namespace mvshrink {

struct ExperimentSpec {
  std::vector<double> c_grid;
  int p = 100;
  double condition_index = 150.0;
  double lambda_min = 0.1;
  bool rotate = true;
  std::vector<Criterion> modes = {Criterion::MeanVariance};
  int replications = 100;
  std::uint64_t seed = 1;
  double gamma = 1.0;
  ReturnDistribution dist = ReturnDistribution::Gaussian;
  double t_df = 5.0;
  double mu_lo = -0.3;
  double mu_hi = 0.3;
};

struct ExperimentRow {
  double c = 0.0;
  int p = 0;
  std::string mode;
  std::string strategy;
  std::string stat;
  double value = 0.0;
  int replications = 0;
  std::uint64_t seed = 0;
};

inline const char* criterion_name(Criterion m) {
  switch (m) {
    case Criterion::MeanVariance: return "mean_variance";
    case Criterion::MinVariance: return "min_variance";
    case Criterion::SharpeRatio: return "sharpe_ratio";
  }
  return "unknown";
}

namespace detail {

struct RepResult {
  bool ok = false;
  double loss_traditional = 0.0;
  double loss_oracle = 0.0;
  double loss_bona_fide = 0.0;
  double alpha_hat = 0.0;
};

}  // namespace detail

inline void validate_experiment_spec(const ExperimentSpec& spec) {
  require(spec.p >= 2, "bad_dimension", "experiment: p must be >= 2");
  require(!spec.c_grid.empty(), "bad_grid", "experiment: c grid is empty");
  require(!spec.modes.empty(), "bad_grid", "experiment: mode list is empty");
  require(spec.replications >= 1, "bad_replications",
          "experiment: replications must be >= 1");
  require(spec.gamma > 0.0, "bad_gamma", "experiment: gamma must be positive");
  for (double c : spec.c_grid) {
    require(std::isfinite(c) && c > 0.0, "bad_grid",
            "experiment: concentrations must be positive");
    const long n = std::lround(static_cast<double>(spec.p) / c);
    require(n >= 2, "bad_grid", "experiment: concentration implies n < 2");
    const double realized = static_cast<double>(spec.p) / static_cast<double>(n);
    if ((c >= guard_band_lo && c <= guard_band_hi) ||
        (realized >= guard_band_lo && realized <= guard_band_hi))
      throw ValidationError("concentration_guard_band",
                            "experiment: grid point lands in the unstable band "
                            "around c = 1");
  }
}

inline std::vector<ExperimentRow> run_loss_experiment(const ExperimentSpec& spec,
                                                      int threads = 1) {
  validate_experiment_spec(spec);

  SpectrumSpec sp;
  sp.p = spec.p;
  sp.condition_index = spec.condition_index;
  sp.lambda_min = spec.lambda_min;
  sp.rotate = spec.rotate;
  sp.rotation_seed = mix64(spec.seed ^ 0x5167a5ULL);
  const Matrix sigma = make_covariance(sp);
  const Matrix root = symmetric_sqrt(sigma);
  const Vector mu = make_means(spec.p, spec.mu_lo, spec.mu_hi);
  const Vector b = Vector::Constant(spec.p, 1.0 / static_cast<double>(spec.p));

  const FrontierParams f_true = true_frontier(mu, sigma);
  const TargetStats t_true = target_stats(b, mu, sigma);
  const double u_opt = eu_utility(f_true, spec.gamma);
  require(u_opt > 0.0, "utility_not_positive",
          "experiment: optimal utility must be positive for relative losses");
  const double loss_target_exact =
      relative_loss_target(f_true, t_true, spec.gamma);

  // The generalized inverse needs the inverse covariance root; only pay for
  // it when the grid has cells above one.
  Matrix inv_root;
  for (double c : spec.c_grid)
    if (c > 1.0) {
      inv_root = symmetric_inv_sqrt(sigma);
      break;
    }

  std::vector<ExperimentRow> rows;
  auto emit = [&](double c, const char* mode, const std::string& strategy,
                  const std::string& stat, double value) {
    rows.push_back({c, spec.p, mode, strategy, stat, value, spec.replications,
                    spec.seed});
  };

  int cell_index = -1;
  for (double c_req : spec.c_grid) {
    const long n = std::lround(static_cast<double>(spec.p) / c_req);
    const double c_hat = static_cast<double>(spec.p) / static_cast<double>(n);
    const double loss_trad_limit =
        relative_loss_traditional(f_true, c_hat, spec.gamma);

    for (Criterion crit : spec.modes) {
      ++cell_index;
      const char* mode_name = criterion_name(crit);
      CalibrationMode mode{crit, spec.gamma, {}};

      double beta = 0.0;
      double alpha_limit = 0.0;
      try {
        beta = resolve_beta(mode, f_true);
        alpha_limit = oracle_alpha_limit(f_true, t_true, c_hat, spec.gamma, beta);
      } catch (const Error&) {
        // Calibration undefined for this cell (e.g. Sharpe with R <= 0):
        // flag it and move on rather than aborting the sweep.
        emit(c_req, mode_name, "cell", "failures",
             static_cast<double>(spec.replications));
        continue;
      }
      // Synthetic sweeps know the true moments, so the Sharpe calibration
      // coefficient is fixed at its true value instead of re-estimated per
      // replication.
      if (crit == Criterion::SharpeRatio && std::isfinite(beta))
        mode.beta_override = beta;

      std::vector<detail::RepResult> reps(spec.replications);
      DgpSpec dgp;
      dgp.n = static_cast<int>(n);
      dgp.dist = spec.dist;
      dgp.t_df = spec.t_df;

      parallel_for(spec.replications, threads, [&](int rep) {
        std::mt19937_64 gen = make_stream(
            spec.seed, static_cast<std::uint64_t>(cell_index),
            static_cast<std::uint64_t>(rep));
        detail::RepResult& out = reps[rep];
        try {
          const Matrix xnoise =
              standardized_noise(spec.p, dgp.n, dgp.dist, dgp.t_df, gen);
          Matrix y = root * xnoise;
          y.colwise() += mu;
          const Vector ybar = sample_mean(y);
          const Matrix s = sample_covariance(y);
          const TargetStats t_hat = target_stats(b, ybar, s);

          Vector w_trad, w_shrink_base;
          FrontierParams f_c;
          if (c_hat < 1.0) {
            const Matrix sinv = spd_inverse(s);
            w_trad = sample_eu_weights(sinv, ybar, spec.gamma);
            w_shrink_base = w_trad;
            f_c = consistent_frontier_lt1(plugin_frontier(ybar, sinv), c_hat);
          } else {
            const Vector xbar = xnoise.rowwise().mean();
            const Matrix gstar = generalized_inverse_from_root(inv_root, xnoise, xbar);
            w_trad = sample_eu_weights(gstar, ybar, spec.gamma);
            const Matrix s_pinv = moore_penrose_pinv(s);
            w_shrink_base = sample_eu_weights(s_pinv, ybar, spec.gamma);
            f_c = consistent_frontier_gt1(s_pinv, ybar, c_hat);
          }
          const double alpha_hat = bona_fide_alpha(f_c, t_hat, c_hat, mode);
          const Vector w_oracle = gse_weights(alpha_limit, w_trad, b);
          const Vector w_bf = gse_weights(alpha_hat, w_shrink_base, b);

          auto rel_loss = [&](const Vector& w) {
            return (u_opt - utility(w, mu, sigma, spec.gamma)) / u_opt;
          };
          out.loss_traditional = rel_loss(w_trad);
          out.loss_oracle = rel_loss(w_oracle);
          out.loss_bona_fide = rel_loss(w_bf);
          out.alpha_hat = alpha_hat;
          out.ok = true;
        } catch (const Error&) {
          out.ok = false;
        }
      });

      std::vector<double> lt, lo, lb, ah;
      for (const auto& r : reps)
        if (r.ok) {
          lt.push_back(r.loss_traditional);
          lo.push_back(r.loss_oracle);
          lb.push_back(r.loss_bona_fide);
          ah.push_back(r.alpha_hat);
        }
      const auto failures = static_cast<double>(spec.replications) -
                            static_cast<double>(lt.size());

      emit(c_req, mode_name, "cell", "failures", failures);
      emit(c_req, mode_name, "traditional", "loss_limit", loss_trad_limit);
      emit(c_req, mode_name, "target", "loss_limit", loss_target_exact);
      emit(c_req, mode_name, "oracle_gse", "alpha_limit", alpha_limit);
      emit(c_req, mode_name, "oracle_gse", "loss_limit",
           relative_loss_gse(alpha_limit, loss_trad_limit, loss_target_exact));
      emit(c_req, mode_name, "bona_fide_gse", "loss_limit",
           relative_loss_gse(alpha_limit, loss_trad_limit, loss_target_exact));
      if (!lt.empty()) {
        emit(c_req, mode_name, "traditional", "loss_mean", mean_of(lt));
        emit(c_req, mode_name, "traditional", "loss_median", median_of(lt));
        emit(c_req, mode_name, "target", "loss_mean", loss_target_exact);
        emit(c_req, mode_name, "target", "loss_median", loss_target_exact);
        emit(c_req, mode_name, "oracle_gse", "loss_mean", mean_of(lo));
        emit(c_req, mode_name, "oracle_gse", "loss_median", median_of(lo));
        emit(c_req, mode_name, "bona_fide_gse", "loss_mean", mean_of(lb));
        emit(c_req, mode_name, "bona_fide_gse", "loss_median", median_of(lb));
        emit(c_req, mode_name, "bona_fide_gse", "alpha_mean", mean_of(ah));
        emit(c_req, mode_name, "bona_fide_gse", "alpha_median", median_of(ah));
      }
    }
  }
  return rows;
}

inline std::string experiment_rows_to_csv(const std::vector<ExperimentRow>& rows) {
  std::string out = "c,p,mode,strategy,stat,value,replications,seed\n";
  for (const auto& r : rows) {
    out += format_double(r.c);
    out += ',';
    out += std::to_string(r.p);
    out += ',';
    out += r.mode;
    out += ',';
    out += r.strategy;
    out += ',';
    out += r.stat;
    out += ',';
    out += format_double(r.value);
    out += ',';
    out += std::to_string(r.replications);
    out += ',';
    out += std::to_string(r.seed);
    out += '\n';
  }
  return out;
}

}  // namespace mvshrink
