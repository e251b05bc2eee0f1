#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "mvshrink/types.hpp"

// Small scalar statistics used across the simulation and backtest layers.
// Conventions fixed here once: population variance (divisor n), the
// interpolating sorted-sample quantile (type 7), and symmetric trimming that
// drops floor(trim/2 * m) observations from each tail.

namespace mvshrink {

inline double mean_of(const std::vector<double>& v) {
  require(!v.empty(), "empty_sample", "mean_of: sample is empty");
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

// Divisor n, matching the covariance convention used everywhere else.
inline double variance_pop(const std::vector<double>& v) {
  const double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return acc / static_cast<double>(v.size());
}

// Lower-tail quantile with linear interpolation between order statistics:
// position (m - 1) u, the convention commonly labelled type 7.
inline double quantile_type7(std::vector<double> v, double u) {
  require(!v.empty(), "empty_sample", "quantile_type7: sample is empty");
  require(u >= 0.0 && u <= 1.0, "bad_quantile_level",
          "quantile_type7: level must lie in [0, 1]");
  std::sort(v.begin(), v.end());
  const double pos = u * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  if (lo + 1 >= v.size()) return v.back();
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[lo + 1] - v[lo]);
}

inline double median_of(std::vector<double> v) {
  return quantile_type7(std::move(v), 0.5);
}

// Drops floor(trim/2 * m) observations from each tail, then averages.
inline double trimmed_mean(std::vector<double> v, double trim) {
  require(!v.empty(), "empty_sample", "trimmed_mean: sample is empty");
  require(trim >= 0.0 && trim < 1.0, "bad_trim",
          "trimmed_mean: trim must lie in [0, 1)");
  std::sort(v.begin(), v.end());
  const auto drop = static_cast<std::size_t>(
      std::floor(0.5 * trim * static_cast<double>(v.size())));
  require(2 * drop < v.size(), "bad_trim", "trimmed_mean: trim removes everything");
  double acc = 0.0;
  for (std::size_t i = drop; i < v.size() - drop; ++i) acc += v[i];
  return acc / static_cast<double>(v.size() - 2 * drop);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace mvshrink
