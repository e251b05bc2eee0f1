#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <string>

#include "mvshrink/types.hpp"

// Moment estimators and inverse machinery shared by every other module.
// Conventions that the rest of the library relies on:
//   * data matrices are p x n (asset by observation),
//   * the sample covariance uses the divisor n, not n - 1,
//   * pseudo-inverses of symmetric matrices go through a symmetric
//     eigendecomposition with a relative rank cutoff.

namespace mvshrink {

inline void check_returns_shape(const Matrix& y, const char* where) {
  require(y.rows() > 0 && y.cols() > 1, "empty_returns",
          std::string(where) + ": returns matrix must have p >= 1 and n >= 2");
  require(y.allFinite(), "nonfinite_returns",
          std::string(where) + ": returns matrix contains non-finite entries");
}

inline double concentration(const Matrix& y) {
  return static_cast<double>(y.rows()) / static_cast<double>(y.cols());
}

// Column mean of a p x n returns matrix.
inline Vector sample_mean(const Matrix& y) {
  check_returns_shape(y, "sample_mean");
  return y.rowwise().mean();
}

// Sample covariance with divisor n: S = (1/n) (Y - ybar 1')(Y - ybar 1')'.
inline Matrix sample_covariance(const Matrix& y) {
  check_returns_shape(y, "sample_covariance");
  const Index n = y.cols();
  Matrix yc = y.colwise() - y.rowwise().mean().eval();
  Matrix s = Matrix::Zero(y.rows(), y.rows());
  s.selfadjointView<Eigen::Lower>().rankUpdate(yc, 1.0 / static_cast<double>(n));
  return Matrix(s.selfadjointView<Eigen::Lower>());
}

inline Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

inline void check_square_symmetric(const Matrix& a, const char* where) {
  require(a.rows() == a.cols(), "not_square",
          std::string(where) + ": matrix must be square");
  require(a.allFinite(), "nonfinite_matrix",
          std::string(where) + ": matrix contains non-finite entries");
  const double scale = a.cwiseAbs().maxCoeff();
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  require(asym <= 1e-8 * (scale > 0.0 ? scale : 1.0), "not_symmetric",
          std::string(where) + ": matrix is not symmetric");
}

// Moore-Penrose pseudo-inverse of a symmetric matrix. Eigenvalues with
// |lambda| <= rank_tol * max|lambda| are treated as zero. The default
// rank_tol is 1e-10 * p.
inline Matrix moore_penrose_pinv(const Matrix& a,
                                 std::optional<double> rank_tol = {}) {
  check_square_symmetric(a, "moore_penrose_pinv");
  const Index p = a.rows();
  const double tol = rank_tol.value_or(1e-10 * static_cast<double>(p));
  require(tol >= 0.0, "bad_rank_tol", "moore_penrose_pinv: rank_tol must be >= 0");

  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a));
  if (es.info() != Eigen::Success)
    throw NumericError("eigen_failure", "moore_penrose_pinv: eigendecomposition failed");

  const Vector& lam = es.eigenvalues();
  const double cutoff = tol * lam.cwiseAbs().maxCoeff();
  Vector inv = Vector::Zero(p);
  for (Index i = 0; i < p; ++i)
    if (std::abs(lam[i]) > cutoff) inv[i] = 1.0 / lam[i];
  Matrix pinv = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
  return symmetrize(pinv);
}

namespace detail {

// Eigendecomposition of a symmetric positive definite matrix, failing loudly
// when the smallest eigenvalue is not safely positive.
inline Eigen::SelfAdjointEigenSolver<Matrix> spd_eigen(const Matrix& a,
                                                       const char* where) {
  check_square_symmetric(a, where);
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a));
  if (es.info() != Eigen::Success)
    throw NumericError("eigen_failure",
                       std::string(where) + ": eigendecomposition failed");
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || lo <= 1e-13 * hi)
    throw NumericError("not_positive_definite",
                       std::string(where) + ": matrix is not positive definite");
  return es;
}

}  // namespace detail

// Symmetric square root of a positive definite matrix.
inline Matrix symmetric_sqrt(const Matrix& a) {
  auto es = detail::spd_eigen(a, "symmetric_sqrt");
  Vector r = es.eigenvalues().cwiseSqrt();
  return symmetrize(es.eigenvectors() * r.asDiagonal() * es.eigenvectors().transpose());
}

// Symmetric square root of a positive semidefinite matrix; eigenvalues in
// the rounding band below zero are clamped to zero.
inline Matrix symmetric_psd_sqrt(const Matrix& a) {
  check_square_symmetric(a, "symmetric_psd_sqrt");
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a));
  if (es.info() != Eigen::Success)
    throw NumericError("eigen_failure",
                       "symmetric_psd_sqrt: eigendecomposition failed");
  const double hi = es.eigenvalues().cwiseAbs().maxCoeff();
  require(es.eigenvalues().minCoeff() >= -1e-8 * std::max(hi, 1.0),
          "not_positive_semidefinite",
          "symmetric_psd_sqrt: matrix has a significantly negative eigenvalue");
  Vector r = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return symmetrize(es.eigenvectors() * r.asDiagonal() *
                    es.eigenvectors().transpose());
}

// Inverse of the symmetric square root of a positive definite matrix.
inline Matrix symmetric_inv_sqrt(const Matrix& a) {
  auto es = detail::spd_eigen(a, "symmetric_inv_sqrt");
  Vector r = es.eigenvalues().cwiseSqrt().cwiseInverse();
  return symmetrize(es.eigenvectors() * r.asDiagonal() * es.eigenvectors().transpose());
}

// Inverse of a symmetric positive definite matrix via Cholesky.
inline Matrix spd_inverse(const Matrix& a) {
  check_square_symmetric(a, "spd_inverse");
  Eigen::LLT<Matrix> llt(symmetrize(a));
  if (llt.info() != Eigen::Success)
    throw NumericError("not_positive_definite",
                       "spd_inverse: matrix is not positive definite");
  return symmetrize(llt.solve(Matrix::Identity(a.rows(), a.cols())));
}

// Reflexive generalized inverse of the sample covariance built from the true
// covariance and the standardized data: sigma^{-1/2} pinv((1/n) X X' - xbar xbar')
// sigma^{-1/2} for X = sigma^{-1/2}(Y - mu 1') and xbar = (1/n) X 1. It inverts
// S on its range but is not the Moore-Penrose inverse: symmetry of S*S can
// fail for non-spherical sigma. For invertible S it reduces to S^{-1}, and for
// sigma proportional to the identity it coincides with pinv(S).
inline Matrix generalized_inverse_from_root(const Matrix& sigma_inv_root,
                                            const Matrix& x, const Vector& xbar) {
  check_returns_shape(x, "generalized_inverse_from_root");
  require(sigma_inv_root.rows() == x.rows() && xbar.size() == x.rows(),
          "shape_mismatch",
          "generalized_inverse_from_root: inputs disagree on p");
  const double n = static_cast<double>(x.cols());
  Matrix inner = Matrix::Zero(x.rows(), x.rows());
  inner.selfadjointView<Eigen::Lower>().rankUpdate(x, 1.0 / n);
  inner = Matrix(inner.selfadjointView<Eigen::Lower>()) - xbar * xbar.transpose();
  return symmetrize(sigma_inv_root * moore_penrose_pinv(inner) * sigma_inv_root);
}

inline Matrix generalized_inverse_oracle(const Matrix& sigma, const Matrix& x,
                                         const Vector& xbar) {
  return generalized_inverse_from_root(symmetric_inv_sqrt(sigma), x, xbar);
}

// Pseudo-inverse of V - xbar xbar' given pinv(V) and xbar, with xbar in the
// column space of V. Two regimes, chosen by t = xbar' V+ xbar:
//   * |1 - t| away from zero: V+ + V+ xbar xbar' V+ / (1 - t), the familiar
//     rank-one downdate (Sherman-Morrison when V is invertible);
//   * t == 1 (the p > n sample-covariance case): the three-term update built
//     from V+ xbar, (V+)^2 xbar and xbar' (V+)^3 xbar.
inline Matrix rank_one_pinv_update(const Matrix& vplus, const Vector& xbar) {
  check_square_symmetric(vplus, "rank_one_pinv_update");
  require(xbar.size() == vplus.rows(), "shape_mismatch",
          "rank_one_pinv_update: xbar length must match matrix size");
  require(xbar.allFinite(), "nonfinite_vector",
          "rank_one_pinv_update: xbar contains non-finite entries");

  if (xbar.isZero(0.0)) return vplus;

  const Vector k1 = vplus * xbar;       // V+ xbar
  const double t = xbar.dot(k1);        // xbar' V+ xbar
  const double d = k1.squaredNorm();    // xbar' (V+)^2 xbar
  const double scale = vplus.cwiseAbs().maxCoeff();
  if (d <= 1e-12 * xbar.squaredNorm() * scale * scale)
    throw NumericError("pinv_update_singular",
                       "rank_one_pinv_update: xbar'(V+)^2 xbar is at the numerical floor");

  if (std::abs(1.0 - t) > 1e-8 * std::max(1.0, std::abs(t)))
    return symmetrize(vplus + (k1 * k1.transpose()) / (1.0 - t));

  const Vector k2 = vplus * k1;         // (V+)^2 xbar
  const double tau = k1.dot(k2);        // xbar' (V+)^3 xbar
  Matrix out = vplus;
  out.noalias() -= (k1 * k2.transpose() + k2 * k1.transpose()) / d;
  out.noalias() += (tau / (d * d)) * (k1 * k1.transpose());
  return symmetrize(out);
}

// Mean-variance tilt matrix Q = Sinv - Sinv 1 1' Sinv / (1' Sinv 1), applied
// to any inverse-like symmetric matrix. Q 1 = 0 by construction.
inline Matrix q_matrix(const Matrix& sinv) {
  check_square_symmetric(sinv, "q_matrix");
  const Index p = sinv.rows();
  const Vector s1 = sinv * Vector::Ones(p);
  const double denom = s1.sum();  // 1' Sinv 1
  const double floor = 1e-12 * static_cast<double>(p) * sinv.cwiseAbs().maxCoeff();
  if (!std::isfinite(denom) || std::abs(denom) <= floor)
    throw NumericError("q_matrix_degenerate",
                       "q_matrix: 1' Sinv 1 is numerically zero");
  return symmetrize(sinv - (s1 * s1.transpose()) / denom);
}

}  // namespace mvshrink
