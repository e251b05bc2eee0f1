#pragma once

#include <Eigen/Dense>
#include <limits>
#include <optional>

#include "mvshrink/errors.hpp"

namespace mvshrink {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Returns matrices are asset-by-observation throughout: p rows, n columns.

// Distinguishes a plain inverse of the sample covariance from its
// Moore-Penrose pseudo-inverse where downstream behaviour differs.
enum class InverseKind { Inverse, PseudoInverse };

// Where a set of frontier parameters came from. Plug-in values are the raw
// sample functionals; the consistent variants carry the dimensional
// corrections for the two concentration regimes.
enum class FrontierSource { TrueParams, PlugIn, ConsistentLt1, ConsistentGt1 };

// Global minimum variance frontier summary: expected return and variance of
// the GMV portfolio plus the frontier slope s (a squared-Sharpe-like spread).
struct FrontierParams {
  double r_gmv = 0.0;
  double v_gmv = 0.0;
  double s = 0.0;
  FrontierSource source = FrontierSource::TrueParams;
};

// Expected return and variance of a fixed target portfolio b.
struct TargetStats {
  double r_b = 0.0;
  double v_b = 0.0;
};

// How the shrinkage coefficient beta is calibrated.
enum class Criterion { MeanVariance, MinVariance, SharpeRatio };

struct CalibrationMode {
  Criterion criterion = Criterion::MeanVariance;
  double gamma = 1.0;
  // When set, overrides the criterion-implied beta with an explicit value.
  std::optional<double> beta_override;
};

// Token for the variance-only calibration limit.
inline constexpr double beta_infinity = std::numeric_limits<double>::infinity();

inline void require(bool cond, const char* name, const std::string& what) {
  if (!cond) throw ValidationError(name, what);
}

}  // namespace mvshrink
