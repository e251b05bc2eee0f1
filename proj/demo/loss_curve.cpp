#include <cstdio>
#include <vector>

#include "mvshrink/mvshrink.hpp"

// Traces the large-dimensional loss formulas over a concentration grid for a
// fixed population: relative loss of the plain sample estimator, the optimal
// shrinkage intensity toward an equal-weight target, and the loss of the
// shrunk portfolio. Values to the right of c = 1 use the pseudo-inverse
// regime; the band around c = 1 itself is excluded.

int main() {
  using namespace mvshrink;

  const int p = 100;
  const double gamma = 1.0;

  SpectrumSpec spectrum;
  spectrum.p = p;
  spectrum.condition_index = 1000.0;
  spectrum.rotate = true;
  spectrum.rotation_seed = 3;
  const Matrix sigma = make_covariance(spectrum);
  const Vector mu = make_means(p);

  const FrontierParams f = true_frontier(mu, sigma);
  const Vector b = target_equal_weight(p);
  const TargetStats t = target_stats(b, mu, sigma);
  const double loss_b = relative_loss_target(f, t, gamma);

  const std::vector<double> grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8,
                                    0.9, 1.1, 1.3, 1.5, 2.0, 2.5, 3.0};

  std::printf("target loss (c-independent): %.4f\n\n", loss_b);
  std::printf("%6s %14s %10s %14s\n", "c", "loss_sample", "alpha", "loss_shrunk");
  for (double c : grid) {
    const double loss_s = relative_loss_traditional(f, c, gamma);
    const double alpha = oracle_alpha_limit(f, t, c, gamma, gamma);
    const double loss_g = relative_loss_gse(alpha, loss_s, loss_b);
    std::printf("%6.2f %14.4f %10.4f %14.4f\n", c, loss_s, alpha, loss_g);
  }
  return 0;
}
