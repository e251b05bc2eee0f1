#pragma once

#include <cmath>
#include <string>

#include "mvshrink/types.hpp"

// Expected-utility relative losses against the true optimal portfolio:
// L(w) = (U_opt - U(w)) / U_opt. Closed forms exist in the large-dimensional
// limit for the plain sample estimator in both concentration regimes, for a
// fixed target portfolio, and for their convex combination.

namespace mvshrink {

// Mean-variance objective U(w) = w'mu - (gamma/2) w' Sigma w.
inline double utility(const Vector& w, const Vector& mu, const Matrix& sigma,
                      double gamma) {
  require(gamma > 0.0, "bad_gamma", "utility: gamma must be positive");
  require(w.size() == mu.size() && mu.size() == sigma.rows(), "shape_mismatch",
          "utility: dimensions disagree");
  require(w.allFinite() && std::abs(w.sum() - 1.0) <= 1e-6,
          "weights_not_normalized", "utility: weights must sum to one");
  return w.dot(mu) - 0.5 * gamma * w.dot(sigma * w);
}

// Utility attained by the true optimal portfolio, in frontier terms:
// U_opt = R_gmv + s / (2 gamma) - (gamma / 2) V_gmv.
inline double eu_utility(const FrontierParams& f, double gamma) {
  require(gamma > 0.0, "bad_gamma", "eu_utility: gamma must be positive");
  require(std::isfinite(f.r_gmv) && f.v_gmv > 0.0 && f.s >= 0.0, "bad_frontier",
          "eu_utility: frontier parameters invalid");
  return f.r_gmv + f.s / (2.0 * gamma) - 0.5 * gamma * f.v_gmv;
}

namespace detail {

inline double positive_eu_utility(const FrontierParams& f, double gamma,
                                  const char* where) {
  const double u = eu_utility(f, gamma);
  if (!(u > 0.0))
    throw NumericError("utility_not_positive",
                       std::string(where) +
                           ": relative loss needs a positive optimal utility");
  return u;
}

}  // namespace detail

// Limiting relative loss of the plain sample estimator. Below c = 1 this is
// the S^{-1} plug-in; above c = 1 it is the generalized-inverse estimator.
inline double relative_loss_traditional(const FrontierParams& f, double c,
                                        double gamma) {
  require(std::isfinite(c) && c > 0.0 && c != 1.0, "bad_concentration",
          "relative_loss_traditional: c must lie in (0,1) or (1,inf)");
  const double u = detail::positive_eu_utility(f, gamma, "relative_loss_traditional");

  double infl, k, k3;  // variance inflation, first and third order factors
  if (c < 1.0) {
    infl = 1.0 / (1.0 - c);
    k = infl;
    k3 = infl * infl * infl;
  } else {
    infl = c * c / (c - 1.0);
    k = 1.0 / (c * (c - 1.0));
    k3 = 1.0 / ((c - 1.0) * (c - 1.0) * (c - 1.0));
  }
  const double num = 0.5 * gamma * (infl - 1.0) * f.v_gmv +
                     (0.5 - k + 0.5 * k3) * f.s / gamma +
                     0.5 * c * k3 / gamma;
  return num / u;
}

// Relative loss of holding a fixed target portfolio b.
inline double relative_loss_target(const FrontierParams& f, const TargetStats& t,
                                   double gamma) {
  const double u = detail::positive_eu_utility(f, gamma, "relative_loss_target");
  require(std::isfinite(t.r_b) && std::isfinite(t.v_b) && t.v_b >= 0.0,
          "bad_target", "relative_loss_target: target stats invalid");
  const double u_b = t.r_b - 0.5 * gamma * t.v_b;
  return (u - u_b) / u;
}

// Loss of the shrunk estimator decomposes exactly:
// L(alpha) = alpha^2 L_traditional + (1 - alpha)^2 L_target.
inline double relative_loss_gse(double alpha, double loss_traditional,
                                double loss_target) {
  require(std::isfinite(alpha) && std::isfinite(loss_traditional) &&
              std::isfinite(loss_target),
          "bad_loss_inputs", "relative_loss_gse: inputs must be finite");
  return alpha * alpha * loss_traditional +
         (1.0 - alpha) * (1.0 - alpha) * loss_target;
}

}  // namespace mvshrink
