#pragma once

#include <cmath>
#include <string>

#include "mvshrink/core.hpp"
#include "mvshrink/types.hpp"

// Global minimum variance weights and the three frontier parameters
// (R_gmv, V_gmv, s) in their true, plug-in and dimension-corrected forms.

namespace mvshrink {

namespace detail {

inline double ones_quadratic(const Matrix& sinv, const char* where) {
  const Vector s1 = sinv * Vector::Ones(sinv.rows());
  const double denom = s1.sum();
  const double floor =
      1e-12 * static_cast<double>(sinv.rows()) * sinv.cwiseAbs().maxCoeff();
  if (!std::isfinite(denom) || std::abs(denom) <= floor)
    throw NumericError("gmv_denominator_degenerate",
                       std::string(where) + ": 1' Sinv 1 is numerically zero");
  return denom;
}

}  // namespace detail

// w = Sinv 1 / (1' Sinv 1), renormalized so the budget holds exactly.
inline Vector gmv_weights(const Matrix& sinv) {
  check_square_symmetric(sinv, "gmv_weights");
  detail::ones_quadratic(sinv, "gmv_weights");
  Vector w = sinv * Vector::Ones(sinv.rows());
  return w / w.sum();
}

// Frontier parameters from the true moments: R = 1'Sigma^{-1}mu / 1'Sigma^{-1}1,
// V = 1 / 1'Sigma^{-1}1, s = mu' Q mu with Q the tilt matrix of Sigma^{-1}.
inline FrontierParams true_frontier(const Vector& mu, const Matrix& sigma) {
  require(mu.size() == sigma.rows(), "shape_mismatch",
          "true_frontier: mu length must match sigma");
  require(mu.allFinite(), "nonfinite_vector", "true_frontier: mu has non-finite entries");
  const Matrix sinv = spd_inverse(sigma);
  const double denom = detail::ones_quadratic(sinv, "true_frontier");
  FrontierParams f;
  f.r_gmv = Vector::Ones(mu.size()).dot(sinv * mu) / denom;
  f.v_gmv = 1.0 / denom;
  f.s = mu.dot(q_matrix(sinv) * mu);
  f.source = FrontierSource::TrueParams;
  return f;
}

// Raw sample functionals of (ybar, Sinv). Consistent only after the regime
// corrections below.
inline FrontierParams plugin_frontier(const Vector& ybar, const Matrix& sinv) {
  require(ybar.size() == sinv.rows(), "shape_mismatch",
          "plugin_frontier: ybar length must match Sinv");
  require(ybar.allFinite(), "nonfinite_vector",
          "plugin_frontier: ybar has non-finite entries");
  check_square_symmetric(sinv, "plugin_frontier");
  const double denom = detail::ones_quadratic(sinv, "plugin_frontier");
  FrontierParams f;
  f.r_gmv = Vector::Ones(ybar.size()).dot(sinv * ybar) / denom;
  f.v_gmv = 1.0 / denom;
  f.s = ybar.dot(q_matrix(sinv) * ybar);
  f.source = FrontierSource::PlugIn;
  return f;
}

// Convenience entry point taking the sample covariance itself. Inverts via
// Cholesky, so it only applies when S is nonsingular (more observations than
// assets); the singular case must go through the pseudo-inverse instead.
inline FrontierParams plugin_frontier_from_cov(const Matrix& s,
                                               const Vector& ybar) {
  check_square_symmetric(s, "plugin_frontier");
  Matrix sinv;
  try {
    sinv = spd_inverse(s);
  } catch (const NumericError&) {
    throw NumericError("plugin_covariance_singular",
                       "plugin_frontier: sample covariance is singular; the "
                       "plug-in frontier requires p < n");
  }
  return plugin_frontier(ybar, sinv);
}

// Dimension-corrected frontier for concentration below one:
//   R_c = R_plug,  V_c = V_plug / (1 - c),  s_c = (1 - c) s_plug - c.
// s_c can come out negative in finite samples; it is reported raw here and
// clamped only where the intensity formulas consume it.
inline FrontierParams consistent_frontier_lt1(const FrontierParams& plug,
                                              double c_hat) {
  require(plug.source == FrontierSource::PlugIn, "bad_frontier_source",
          "consistent_frontier_lt1: input must be a plug-in frontier");
  require(c_hat > 0.0 && c_hat < 1.0, "bad_concentration",
          "consistent_frontier_lt1: requires 0 < c_hat < 1");
  FrontierParams f;
  f.r_gmv = plug.r_gmv;
  f.v_gmv = plug.v_gmv / (1.0 - c_hat);
  f.s = (1.0 - c_hat) * plug.s - c_hat;
  f.source = FrontierSource::ConsistentLt1;
  return f;
}

// Dimension-corrected frontier for concentration above one, built on the
// Moore-Penrose inverse of the singular sample covariance:
//   R_c = ybar' S+ 1 / (1' S+ 1),
//   V_c = (1 / (c (c - 1))) / (1' S+ 1),
//   s_c = c ((c - 1) ybar' Q+ ybar - 1).
// These corrections are exact in the spherical-covariance limit and serve as
// workable approximations otherwise.
inline FrontierParams consistent_frontier_gt1(const Matrix& s_pinv,
                                              const Vector& ybar, double c_hat) {
  require(ybar.size() == s_pinv.rows(), "shape_mismatch",
          "consistent_frontier_gt1: ybar length must match S+");
  require(ybar.allFinite(), "nonfinite_vector",
          "consistent_frontier_gt1: ybar has non-finite entries");
  require(c_hat > 1.0, "bad_concentration",
          "consistent_frontier_gt1: requires c_hat > 1");
  check_square_symmetric(s_pinv, "consistent_frontier_gt1");
  const double denom = detail::ones_quadratic(s_pinv, "consistent_frontier_gt1");
  if (denom <= 0.0)
    throw NumericError("gmv_denominator_degenerate",
                       "consistent_frontier_gt1: 1' S+ 1 must be positive");
  FrontierParams f;
  f.r_gmv = Vector::Ones(ybar.size()).dot(s_pinv * ybar) / denom;
  f.v_gmv = 1.0 / (c_hat * (c_hat - 1.0) * denom);
  f.s = c_hat * ((c_hat - 1.0) * ybar.dot(q_matrix(s_pinv) * ybar) - 1.0);
  f.source = FrontierSource::ConsistentGt1;
  return f;
}

// Expected return and variance of a fixed portfolio b under (mean, cov);
// works with true moments or their estimates.
inline TargetStats target_stats(const Vector& b, const Vector& mean_vec,
                                const Matrix& cov) {
  require(b.size() == mean_vec.size() && b.size() == cov.rows(), "shape_mismatch",
          "target_stats: dimensions disagree");
  require(b.allFinite() && mean_vec.allFinite(), "nonfinite_vector",
          "target_stats: non-finite entries");
  check_square_symmetric(cov, "target_stats");
  require(std::abs(b.sum() - 1.0) <= 1e-8, "target_not_normalized",
          "target_stats: target weights must sum to one");
  TargetStats t;
  t.r_b = b.dot(mean_vec);
  t.v_b = b.dot(cov * b);
  return t;
}

}  // namespace mvshrink
