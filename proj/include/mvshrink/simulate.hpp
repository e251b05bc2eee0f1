#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "mvshrink/core.hpp"
#include "mvshrink/rng.hpp"
#include "mvshrink/types.hpp"

// Synthetic data generation: covariance spectra with a prescribed condition
// index, equally spread mean vectors, and seeded returns panels.

namespace mvshrink {

// Geometric eigenvalue grid from lambda_min up to lambda_min * condition_index,
// optionally conjugated by a seeded random rotation.
struct SpectrumSpec {
  int p = 0;
  double condition_index = 1.0;
  double lambda_min = 0.1;
  bool rotate = false;
  std::uint64_t rotation_seed = 0;
};

enum class ReturnDistribution { Gaussian, StudentT };

struct DgpSpec {
  int n = 0;
  ReturnDistribution dist = ReturnDistribution::Gaussian;
  double t_df = 5.0;  // standardized to unit variance before mixing
  std::uint64_t seed = 0;
};

// Haar-like random rotation: QR of a Gaussian matrix with the sign of R's
// diagonal fixed, making the draw unambiguous for a given seed.
inline Matrix random_rotation(int p, std::uint64_t seed) {
  require(p >= 1, "bad_dimension", "random_rotation: p must be >= 1");
  std::mt19937_64 gen = make_stream(seed, 0x0071a7e, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(p, p);
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i < p; ++i) g(i, j) = normal(gen);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  Vector rdiag = qr.matrixQR().diagonal();
  for (Index j = 0; j < p; ++j)
    if (rdiag[j] < 0.0) q.col(j) = -q.col(j);
  return q;
}

inline Matrix make_covariance(const SpectrumSpec& spec) {
  require(spec.p >= 1, "bad_dimension", "make_covariance: p must be >= 1");
  require(spec.lambda_min > 0.0, "bad_spectrum",
          "make_covariance: lambda_min must be positive");
  require(spec.condition_index >= 1.0, "bad_spectrum",
          "make_covariance: condition_index must be >= 1");
  const Index p = spec.p;
  if (p == 1) {
    require(spec.condition_index == 1.0, "bad_spectrum",
            "make_covariance: a 1x1 matrix cannot have condition_index > 1");
    return Matrix::Constant(1, 1, spec.lambda_min);
  }
  Vector lam(p);
  const double log_ci = std::log(spec.condition_index);
  for (Index i = 0; i < p; ++i)
    lam[i] = spec.lambda_min *
             std::exp(log_ci * static_cast<double>(i) / static_cast<double>(p - 1));
  if (!spec.rotate) return Matrix(lam.asDiagonal());
  const Matrix q = random_rotation(spec.p, spec.rotation_seed);
  return symmetrize(q * lam.asDiagonal() * q.transpose());
}

// Means equally spread over [lo, hi]; a single asset gets the midpoint.
inline Vector make_means(int p, double lo = -0.3, double hi = 0.3) {
  require(p >= 1, "bad_dimension", "make_means: p must be >= 1");
  require(std::isfinite(lo) && std::isfinite(hi) && lo <= hi, "bad_range",
          "make_means: invalid mean range");
  Vector mu(p);
  if (p == 1) {
    mu[0] = 0.5 * (lo + hi);
    return mu;
  }
  for (int i = 0; i < p; ++i)
    mu[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(p - 1);
  return mu;
}

// p x n matrix of i.i.d. entries with mean zero and unit variance. Student-t
// draws are rescaled by sqrt((df - 2) / df); df must exceed 4 so that the
// fourth moments backing the limit theorems exist.
inline Matrix standardized_noise(Index p, Index n, ReturnDistribution dist,
                                 double t_df, std::mt19937_64& gen) {
  require(p >= 1 && n >= 1, "bad_dimension",
          "standardized_noise: p and n must be >= 1");
  Matrix x(p, n);
  if (dist == ReturnDistribution::Gaussian) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < p; ++i) x(i, j) = normal(gen);
    return x;
  }
  require(t_df > 4.0, "bad_degrees_of_freedom",
          "standardized_noise: student t needs df > 4");
  std::student_t_distribution<double> student(t_df);
  const double scale = std::sqrt((t_df - 2.0) / t_df);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < p; ++i) x(i, j) = scale * student(gen);
  return x;
}

// Y = mu 1' + sigma_root X with X standardized noise. The caller supplies the
// symmetric root so that loops over replications pay for it once.
inline Matrix generate_returns_with_root(const Vector& mu, const Matrix& sigma_root,
                                         const DgpSpec& dgp, std::mt19937_64& gen) {
  require(mu.size() == sigma_root.rows(), "shape_mismatch",
          "generate_returns_with_root: mu length must match sigma_root");
  require(dgp.n >= 1, "bad_dimension", "generate_returns_with_root: n must be >= 1");
  Matrix x = standardized_noise(mu.size(), dgp.n, dgp.dist, dgp.t_df, gen);
  Matrix y = sigma_root * x;
  y.colwise() += mu;
  return y;
}

inline Matrix generate_returns(const Vector& mu, const Matrix& sigma,
                               const DgpSpec& dgp) {
  std::mt19937_64 gen = make_stream(dgp.seed, 0, 0);
  return generate_returns_with_root(mu, symmetric_psd_sqrt(sigma), dgp, gen);
}

}  // namespace mvshrink
