#pragma once

#include <cmath>
#include <string>

#include "mvshrink/core.hpp"
#include "mvshrink/frontier.hpp"
#include "mvshrink/types.hpp"

// Shrinkage of sample mean-variance weights toward a fixed target portfolio:
// w(alpha) = alpha w_hat + (1 - alpha) b. The optimal alpha maximizes the
// calibration objective R(w) - (beta/2) Var(w); beta = gamma recovers the
// mean-variance utility, beta -> infinity the out-of-sample variance, and
// beta = R_gmv / V_gmv a Sharpe-ratio proxy. Closed-form large-dimensional
// limits exist for both concentration regimes and are estimated consistently
// from data by the bona fide variant.

namespace mvshrink {

// Concentrations this close to one are numerically unstable for every
// intensity formula below and are rejected outright.
inline constexpr double guard_band_lo = 0.95;
inline constexpr double guard_band_hi = 1.05;

inline void check_guard_band(double c, const char* where) {
  require(std::isfinite(c) && c > 0.0, "bad_concentration",
          std::string(where) + ": concentration must be positive and finite");
  if (c >= guard_band_lo && c <= guard_band_hi)
    throw NumericError("concentration_guard_band",
                       std::string(where) +
                           ": concentration inside the unstable band around one");
}

// True optimal mean-variance weights: w_gmv + gamma^{-1} Q mu.
inline Vector eu_weights_true(const Vector& mu, const Matrix& sigma, double gamma) {
  require(gamma > 0.0, "bad_gamma", "eu_weights_true: gamma must be positive");
  require(mu.size() == sigma.rows(), "shape_mismatch",
          "eu_weights_true: mu length must match sigma");
  const Matrix sinv = spd_inverse(sigma);
  return gmv_weights(sinv) + (1.0 / gamma) * (q_matrix(sinv) * mu);
}

// Sample counterpart, accepting S^{-1}, pinv(S) or the oracle generalized
// inverse in place of Sigma^{-1}. The budget constraint holds by construction:
// the GMV part is renormalized and the tilt part sums to zero.
inline Vector sample_eu_weights(const Matrix& sinv_like, const Vector& ybar,
                                double gamma) {
  require(gamma > 0.0, "bad_gamma", "sample_eu_weights: gamma must be positive");
  require(ybar.size() == sinv_like.rows(), "shape_mismatch",
          "sample_eu_weights: ybar length must match the inverse matrix");
  require(ybar.allFinite(), "nonfinite_vector",
          "sample_eu_weights: ybar has non-finite entries");
  return gmv_weights(sinv_like) + (1.0 / gamma) * (q_matrix(sinv_like) * ybar);
}

namespace detail {

inline void check_weight_sum(const Vector& w, const char* what, double tol) {
  require(w.allFinite(), "nonfinite_vector",
          std::string(what) + ": weights have non-finite entries");
  require(std::abs(w.sum() - 1.0) <= tol, "weights_not_normalized",
          std::string(what) + ": weights must sum to one");
}

}  // namespace detail

// Exact finite-sample optimizer of the calibration objective along the
// segment from b to w_hat, using the true moments:
//   alpha = (w_hat - b)'(mu - beta Sigma b) / (beta (w_hat - b)' Sigma (w_hat - b)).
// beta may be infinite, in which case the variance-minimizing limit
// -(w_hat - b)' Sigma b / (w_hat - b)' Sigma (w_hat - b) is returned.
inline double finite_sample_alpha(const Vector& w_hat, const Vector& b,
                                  const Vector& mu, const Matrix& sigma,
                                  double beta) {
  require(w_hat.size() == b.size() && b.size() == mu.size() &&
              mu.size() == sigma.rows(),
          "shape_mismatch", "finite_sample_alpha: dimensions disagree");
  require(beta > 0.0, "bad_beta", "finite_sample_alpha: beta must be positive");
  detail::check_weight_sum(w_hat, "finite_sample_alpha w_hat", 1e-6);
  detail::check_weight_sum(b, "finite_sample_alpha b", 1e-8);

  const Vector d = w_hat - b;
  const double den = d.dot(sigma * d);
  const double floor = 1e-14 * sigma.cwiseAbs().maxCoeff() * d.squaredNorm() +
                       std::numeric_limits<double>::min();
  if (!(den > floor))
    throw NumericError("alpha_denominator_degenerate",
                       "finite_sample_alpha: (w_hat - b)' Sigma (w_hat - b) is "
                       "numerically zero");
  if (std::isinf(beta)) return -d.dot(sigma * b) / den;
  return d.dot(mu - beta * (sigma * b)) / (beta * den);
}

namespace detail {

// Large-dimensional limit of the optimal intensity, shared by the oracle and
// bona fide entry points. A negative frontier slope s is clamped to zero at
// the point of consumption; the caller keeps the raw value for reporting.
inline double alpha_limit_formula(const FrontierParams& f, const TargetStats& t,
                                  double c, double gamma, double beta,
                                  const char* where) {
  check_guard_band(c, where);
  require(gamma > 0.0, "bad_gamma", std::string(where) + ": gamma must be positive");
  require(beta > 0.0, "bad_beta", std::string(where) + ": beta must be positive");
  require(std::isfinite(f.r_gmv) && std::isfinite(f.s) && f.v_gmv > 0.0,
          "bad_frontier", std::string(where) + ": frontier parameters invalid");
  require(std::isfinite(t.r_b) && t.v_b > 0.0, "bad_target",
          std::string(where) + ": target stats invalid");

  const double s = std::max(f.s, 0.0);
  const double rr = f.r_gmv - t.r_b;  // R_gmv - R_b
  const double vv = t.v_b - f.v_gmv;  // V_b - V_gmv

  // k is the variance inflation factor of the sample GMV variance, k2 the
  // second-order analogue; both depend on the side of c = 1.
  double k, k2, lead;
  if (c < 1.0) {
    k = 1.0 / (1.0 - c);
    k2 = k * k * k;
    lead = k;  // coefficient of V_gmv in the quadratic term
  } else {
    k = 1.0 / (c * (c - 1.0));
    k2 = 1.0 / ((c - 1.0) * (c - 1.0) * (c - 1.0));
    lead = c * c / (c - 1.0);
  }

  const double denom = lead * f.v_gmv -
                       2.0 * (f.v_gmv + (k / gamma) * (t.r_b - f.r_gmv)) +
                       (s + c) * k2 / (gamma * gamma) + t.v_b;
  if (!(denom > 0.0) || !std::isfinite(denom))
    throw NumericError("alpha_denominator_degenerate",
                       std::string(where) +
                           ": limiting objective curvature is not positive");

  if (std::isinf(beta)) return (rr * k / gamma + vv) / denom;
  const double numer = rr * (1.0 + (beta / gamma) * k) + beta * vv + (k / gamma) * s;
  return numer / (beta * denom);
}

}  // namespace detail

// Limit of the optimal intensity evaluated at the true frontier parameters.
inline double oracle_alpha_limit(const FrontierParams& f, const TargetStats& t,
                                 double c, double gamma, double beta) {
  return detail::alpha_limit_formula(f, t, c, gamma, beta, "oracle_alpha_limit");
}

// Calibration coefficient implied by a mode: gamma for MeanVariance, the
// infinity token for MinVariance, R / V of the supplied frontier for
// SharpeRatio. An explicit override wins over all three.
inline double resolve_beta(const CalibrationMode& mode, const FrontierParams& f) {
  require(mode.gamma > 0.0, "bad_gamma", "resolve_beta: gamma must be positive");
  if (mode.beta_override) {
    require(*mode.beta_override > 0.0, "bad_beta",
            "resolve_beta: beta override must be positive");
    return *mode.beta_override;
  }
  switch (mode.criterion) {
    case Criterion::MeanVariance:
      return mode.gamma;
    case Criterion::MinVariance:
      return beta_infinity;
    case Criterion::SharpeRatio: {
      require(f.v_gmv > 0.0, "bad_frontier", "resolve_beta: V_gmv must be positive");
      if (!(f.r_gmv > 0.0))
        throw NumericError("sharpe_calibration_undefined",
                           "resolve_beta: Sharpe calibration needs R_gmv > 0");
      return f.r_gmv / f.v_gmv;
    }
  }
  throw ValidationError("bad_mode", "resolve_beta: unknown criterion");
}

// Data-driven intensity: the limit formula evaluated at consistently
// estimated frontier and target parameters, with c replaced by p/n. The
// frontier source must match the concentration regime.
inline double bona_fide_alpha(const FrontierParams& f_c, const TargetStats& t_hat,
                              double c_hat, const CalibrationMode& mode) {
  check_guard_band(c_hat, "bona_fide_alpha");
  if (c_hat < 1.0)
    require(f_c.source == FrontierSource::ConsistentLt1, "bad_frontier_source",
            "bona_fide_alpha: c_hat < 1 needs a ConsistentLt1 frontier");
  else
    require(f_c.source == FrontierSource::ConsistentGt1, "bad_frontier_source",
            "bona_fide_alpha: c_hat > 1 needs a ConsistentGt1 frontier");
  const double beta = resolve_beta(mode, f_c);
  return detail::alpha_limit_formula(f_c, t_hat, c_hat, mode.gamma, beta,
                                     "bona_fide_alpha");
}

// w = alpha w_hat + (1 - alpha) b. alpha is used as given: values outside
// [0, 1] are legitimate whenever the objective says so.
inline Vector gse_weights(double alpha, const Vector& w_hat, const Vector& b) {
  require(std::isfinite(alpha), "bad_alpha", "gse_weights: alpha must be finite");
  require(w_hat.size() == b.size(), "shape_mismatch",
          "gse_weights: weight vectors disagree on length");
  detail::check_weight_sum(w_hat, "gse_weights w_hat", 1e-6);
  detail::check_weight_sum(b, "gse_weights b", 1e-8);
  return alpha * w_hat + (1.0 - alpha) * b;
}

}  // namespace mvshrink
