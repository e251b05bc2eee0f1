#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mvshrink/core.hpp"
#include "mvshrink/rng.hpp"
#include "mvshrink/shrinkage.hpp"
#include "mvshrink/simulate.hpp"
#include "mvshrink/types.hpp"

// Empirical verification of the almost-sure limits of bilinear forms in
// inverse and pseudo-inverse sample Gram matrices. With X a p x n matrix of
// i.i.d. standardized entries, xbar = (1/n) X 1 and c = p / n, the library's
// regime corrections rest on the limits of
//   V  = (1/n) X X' - xbar xbar'  (the covariance-shaped Gram matrix),
//   Vt = (1/n) X X'               (uncentered; pseudo-inverted for c > 1),
//   P  = Vinv - Vinv eta eta' Vinv / (eta' Vinv eta)  (tilted by a probe eta),
// evaluated against fixed unit probe vectors xi, theta.
//
// The reported empirical value of each quantity is the mean over independent
// replications (the limits are constants, so averaging estimates the same
// number with a root-R smaller noise floor). Mixed forms pairing xbar with a
// fixed probe carry the largest per-draw variance; only their first inverse
// powers are tabulated, since higher powers would need replication counts far
// beyond the runtime the table is meant to have.
//
// Nothing here materializes a p x p inverse: each draw costs one Cholesky
// factorization per matrix and a handful of triangular solves. For c > 1 the
// forms are evaluated in the n-dimensional Gram space, where for instance
// a' (Vt^+)^k b = n^k (X'a)' (X'X)^{-(k+1)} (X'b), and the centered Gram's
// null space is exactly the ones vector, so its pseudo-inverse acts as the
// plain inverse of Gc + alpha 11'/n on the probe images (all orthogonal to 1).

namespace mvshrink {

struct RmtProbes {
  Vector xi;
  Vector theta;
  Vector eta;
};

struct RmtRow {
  std::string quantity;
  double empirical = 0.0;
  double limit = 0.0;
  bool zero_limit = false;   // judged by absolute gap, the limit is 0
  bool exact_identity = false;  // holds for every n, not only asymptotically
  double abs_gap() const { return std::abs(empirical - limit); }
  double rel_gap() const {
    return std::abs(empirical - limit) / std::abs(limit);
  }
};

// Deterministic probes with pairwise overlaps bounded away from zero, so the
// nonzero limits are O(1) and relative tolerances are meaningful:
//   theta = u, xi = 0.6 u + 0.8 v, eta = (u + 2 v) / sqrt(5),
// with u the normalized ones vector and v a normalized alternating vector
// orthogonal to u.
inline RmtProbes default_rmt_probes(Index p) {
  require(p >= 2, "bad_dimension", "default_rmt_probes: p must be >= 2");
  Vector u = Vector::Constant(p, 1.0 / std::sqrt(static_cast<double>(p)));
  Vector v(p);
  for (Index i = 0; i < p; ++i) v[i] = (i % 2 == 0) ? 1.0 : -1.0;
  v -= v.dot(u) * u;
  v.normalize();
  RmtProbes pr;
  pr.theta = u;
  pr.xi = 0.6 * u + 0.8 * v;
  pr.eta = (u + 2.0 * v) / std::sqrt(5.0);
  return pr;
}

namespace detail {

// Cholesky-backed solves against a symmetric positive definite matrix.
class SpdSolver {
 public:
  SpdSolver(const Matrix& m, const char* where) : llt_(m) {
    if (llt_.info() != Eigen::Success)
      throw NumericError("factorization_failure",
                         std::string(where) +
                             ": Cholesky factorization failed; the matrix is "
                             "not numerically positive definite");
  }
  Vector solve(const Vector& v) const { return llt_.solve(v); }

 private:
  Eigen::LLT<Matrix> llt_;
};

// Forms of the eta-tilted matrix P from first and second inverse powers:
// a' P b and a' P^2 b expand into the V^{-1}, V^{-2} forms of a, b and eta.
struct TiltedForms {
  double a1b, a1e, b1e, e1e;  // first-power forms
  double a2b, a2e, b2e, e2e;  // second-power forms
  double first() const { return a1b - a1e * b1e / e1e; }
  double second() const {
    return a2b - a2e * b1e / e1e - a1e * b2e / e1e + e2e * a1e * b1e / (e1e * e1e);
  }
};

}  // namespace detail

// Averaged verification table over seeded replications. Rows with zero_limit
// are judged on absolute gaps; the xbar' Vt^+ xbar row is an algebraic
// identity and holds to rounding for every p > n.
inline std::vector<RmtRow> verify_rmt_limits(
    int p, int n, std::uint64_t seed,
    const std::optional<RmtProbes>& probes_in = {}, int replications = 16) {
  require(p >= 2 && n >= 2, "bad_dimension",
          "verify_rmt_limits: p and n must be >= 2");
  require(replications >= 1, "bad_replications",
          "verify_rmt_limits: replications must be >= 1");
  const double c = static_cast<double>(p) / static_cast<double>(n);
  check_guard_band(c, "verify_rmt_limits");

  RmtProbes pr = probes_in.value_or(default_rmt_probes(p));
  require(pr.xi.size() == p && pr.theta.size() == p && pr.eta.size() == p,
          "shape_mismatch", "verify_rmt_limits: probes must have length p");
  for (const Vector* v : {&pr.xi, &pr.theta, &pr.eta})
    require(std::abs(v->norm() - 1.0) <= 1e-8, "probe_not_normalized",
            "verify_rmt_limits: probes must have unit norm");

  const double xi_theta = pr.xi.dot(pr.theta);
  const double proj = xi_theta - pr.xi.dot(pr.eta) * pr.eta.dot(pr.theta) /
                                     pr.eta.squaredNorm();
  const double dn = static_cast<double>(n);

  std::vector<RmtRow> rows;
  auto push = [&rows](std::string q, double lim, bool zero = false,
                      bool exact = false) {
    rows.push_back({std::move(q), 0.0, lim, zero, exact});
  };

  if (c < 1.0) {
    const double om = 1.0 / (1.0 - c);
    const double om3 = om * om * om;
    push("xi'V^-1 theta", om * xi_theta);
    push("xbar'V^-1 xbar", c * om);
    push("xbar'V^-1 theta", 0.0, true);
    push("xi'V^-2 theta", om3 * xi_theta);
    push("xbar'V^-2 xbar", c * om3);
    push("xi'P theta", om * proj);
    push("xbar'P xbar", c * om);
    push("xbar'P theta", 0.0, true);
    push("xi'P^2 theta", om3 * proj);
    push("xbar'P^2 xbar", c * om3);
  } else {
    const double cm = c - 1.0;
    const double om = 1.0 / (c * cm);
    const double kk3 = 1.0 / (cm * cm * cm);
    push("xi'Vt^+ theta", om * xi_theta);
    push("xi'Vt^+2 theta", kk3 * xi_theta);
    push("xbar'Vt^+ xbar", 1.0, false, true);
    push("xbar'Vt^+2 xbar", 1.0 / cm);
    push("xbar'Vt^+3 xbar", c * kk3);
    push("xbar'Vt^+4 xbar", c * (c + 1.0) / std::pow(cm, 5));
    push("xi'V^+ theta", om * xi_theta);
    push("xbar'V^+ xbar", 1.0 / cm);
    push("xbar'V^+ theta", 0.0, true);
    push("xi'V^+2 theta", kk3 * xi_theta);
    push("xbar'V^+2 xbar", c * kk3);
    push("xi'P^+ theta", om * proj);
    push("xbar'P^+ xbar", 1.0 / cm);
    push("xbar'P^+ theta", 0.0, true);
    push("xi'P^+2 theta", kk3 * proj);
    push("xbar'P^+2 xbar", c * kk3);
  }

  for (int rep = 0; rep < replications; ++rep) {
    std::mt19937_64 gen =
        make_stream(seed, 0x0011771, static_cast<std::uint64_t>(rep));
    const Matrix x =
        standardized_noise(p, n, ReturnDistribution::Gaussian, 5.0, gen);
    const Vector xbar = x.rowwise().mean();
    std::size_t next = 0;
    auto add = [&rows, &next](double value) { rows[next++].empirical += value; };

    if (c < 1.0) {
      Matrix v = Matrix::Zero(p, p);
      v.selfadjointView<Eigen::Lower>().rankUpdate(x, 1.0 / dn);
      v = Matrix(v.selfadjointView<Eigen::Lower>()) -
          xbar * xbar.transpose();

      const detail::SpdSolver sol(v, "verify_rmt_limits V");
      const Vector vxi = sol.solve(pr.xi), vth = sol.solve(pr.theta),
                   vet = sol.solve(pr.eta), vxb = sol.solve(xbar);

      add(pr.xi.dot(vth));
      add(xbar.dot(vxb));
      add(xbar.dot(vth));
      add(vxi.dot(vth));
      add(vxb.dot(vxb));

      auto tilted = [&](const Vector& a, const Vector& va, const Vector& b,
                        const Vector& vb) {
        detail::TiltedForms tf;
        tf.a1b = a.dot(vb); tf.a1e = a.dot(vet);
        tf.b1e = b.dot(vet); tf.e1e = pr.eta.dot(vet);
        tf.a2b = va.dot(vb); tf.a2e = va.dot(vet);
        tf.b2e = vb.dot(vet); tf.e2e = vet.dot(vet);
        return tf;
      };
      const auto xi_th = tilted(pr.xi, vxi, pr.theta, vth);
      const auto xb_xb = tilted(xbar, vxb, xbar, vxb);
      add(xi_th.first());
      add(xb_xb.first());
      add(tilted(xbar, vxb, pr.theta, vth).first());
      add(xi_th.second());
      add(xb_xb.second());
      continue;
    }

    // c > 1: Gram space. G = X'X and m = G 1 / n is the image of xbar; the
    // centered Gram follows from G by a symmetric rank-two update.
    Matrix g = Matrix::Zero(n, n);
    g.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
    g = Matrix(g.selfadjointView<Eigen::Lower>());
    const Vector ones = Vector::Ones(n);
    const Vector m = g * ones / dn;

    {
      const detail::SpdSolver sol(g, "verify_rmt_limits G");
      const Vector g1r = sol.solve(x.transpose() * pr.xi);
      const Vector g1t = sol.solve(x.transpose() * pr.theta);
      const Vector g2t = sol.solve(g1t);
      const Vector g1m = sol.solve(m);
      const Vector g2m = sol.solve(g1m);
      const Vector g3m = sol.solve(g2m);
      add(dn * g1r.dot(g1t));
      add(dn * dn * g1r.dot(g2t));
      add(dn * g1m.dot(g1m));
      add(dn * dn * g1m.dot(g2m));
      add(std::pow(dn, 3) * g2m.dot(g2m));
      add(std::pow(dn, 4) * g2m.dot(g3m));
    }

    const double xb2 = xbar.squaredNorm();
    Matrix gc = g - m * ones.transpose() - ones * m.transpose() +
                xb2 * ones * ones.transpose();
    // The ones vector spans the centered Gram's null space exactly; shifting
    // along it by the average eigenvalue makes the matrix definite without
    // touching the probe images, which are all orthogonal to 1.
    const double shift = gc.trace() / dn;
    gc += (shift / dn) * ones * ones.transpose();
    const detail::SpdSolver sol(gc, "verify_rmt_limits Gc");

    const Vector rc = x.transpose() * pr.xi - (xbar.dot(pr.xi)) * ones;
    const Vector tc = x.transpose() * pr.theta - (xbar.dot(pr.theta)) * ones;
    const Vector ec = x.transpose() * pr.eta - (xbar.dot(pr.eta)) * ones;
    const Vector mc = m - xb2 * ones;
    const Vector c1r = sol.solve(rc), c1t = sol.solve(tc), c1e = sol.solve(ec),
                 c1m = sol.solve(mc);
    const Vector c2t = sol.solve(c1t), c2e = sol.solve(c1e),
                 c2m = sol.solve(c1m);

    add(dn * c1r.dot(c1t));
    add(dn * c1m.dot(c1m));
    add(dn * c1m.dot(c1t));
    add(dn * dn * c1r.dot(c2t));
    add(dn * dn * c1m.dot(c2m));

    auto tilted = [&](const Vector& c1a, const Vector& c1b,
                      const Vector& c2b) {
      detail::TiltedForms tf;
      tf.a1b = dn * c1a.dot(c1b); tf.a1e = dn * c1a.dot(c1e);
      tf.b1e = dn * c1b.dot(c1e); tf.e1e = dn * c1e.dot(c1e);
      tf.a2b = dn * dn * c1a.dot(c2b); tf.a2e = dn * dn * c1a.dot(c2e);
      tf.b2e = dn * dn * c1b.dot(c2e); tf.e2e = dn * dn * c1e.dot(c2e);
      return tf;
    };
    const auto xi_th = tilted(c1r, c1t, c2t);
    const auto xb_xb = tilted(c1m, c1m, c2m);
    add(xi_th.first());
    add(xb_xb.first());
    add(tilted(c1m, c1t, c2t).first());
    add(xi_th.second());
    add(xb_xb.second());
  }

  for (auto& r : rows) r.empirical /= static_cast<double>(replications);
  return rows;
}

}  // namespace mvshrink
