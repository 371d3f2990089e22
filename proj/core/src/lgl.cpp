#include "hjb/lgl.hpp"

#include <cmath>

#include "hjb/errors.hpp"

namespace hjb {

std::pair<double, double> legendre_pair(int n, double x) {
  if (n == 0) return {1.0, 0.0};
  double p_prev = 1.0;
  double p = x;
  for (int k = 1; k < n; ++k) {
    const double p_next = ((2 * k + 1) * x * p - k * p_prev) / (k + 1);
    p_prev = p;
    p = p_next;
  }
  // L'_N from the standard identity; at x = +-1 use L'_N(+-1) = (+-1)^{N-1} N(N+1)/2.
  double dp;
  if (std::abs(1.0 - x * x) < 1e-14) {
    const double sign = x > 0 ? 1.0 : (n % 2 == 0 ? -1.0 : 1.0);
    dp = sign * 0.5 * n * (n + 1);
  } else {
    dp = n * (x * p - p_prev) / (x * x - 1.0);
  }
  return {p, dp};
}

LglGrid lgl_grid(int order) {
  if (order < 1) throw ConfigError("lgl_grid: order must be >= 1");
  const int n = order;
  LglGrid g;
  g.order = n;
  g.nodes.resize(n + 1);
  g.nodes[0] = -1.0;
  g.nodes[n] = 1.0;

  // Interior nodes: Newton on L'_N with the second derivative from the
  // Legendre ODE (1 - x^2) L'' = 2x L' - N(N+1) L.
  for (int k = 1; k < n; ++k) {
    double x = -std::cos(M_PI * k / n);
    bool converged = false;
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre_pair(n, x);
      const double ddp = (2.0 * x * dp - n * (n + 1) * p) / (1.0 - x * x);
      const double step = dp / ddp;
      x -= step;
      if (std::abs(step) < 1e-15) {
        converged = true;
        break;
      }
    }
    if (!converged)
      throw NewtonFailure("lgl_grid: interior node " + std::to_string(k) +
                          " did not converge");
    g.nodes[k] = x;
  }
  // Enforce the exact symmetry of the root set.
  for (int k = 1; k < n - k; ++k) {
    const double v = 0.5 * (g.nodes[n - k] - g.nodes[k]);
    g.nodes[k] = -v;
    g.nodes[n - k] = v;
  }
  if (n % 2 == 0) g.nodes[n / 2] = 0.0;

  g.weights.resize(n + 1);
  for (int k = 0; k <= n; ++k) {
    const double lnk = legendre_pair(n, g.nodes[k]).first;
    g.weights[k] = 2.0 / (n * (n + 1) * lnk * lnk);
  }

  g.diff.resize(n + 1, n + 1);
  Eigen::VectorXd ln(n + 1);
  for (int k = 0; k <= n; ++k) ln[k] = legendre_pair(n, g.nodes[k]).first;
  for (int k = 0; k <= n; ++k) {
    double row_sum = 0.0;
    for (int j = 0; j <= n; ++j) {
      if (j == k) continue;
      g.diff(k, j) = (ln[k] / ln[j]) / (g.nodes[k] - g.nodes[j]);
      row_sum += g.diff(k, j);
    }
    // Constants must differentiate to exactly zero.
    g.diff(k, k) = -row_sum;
  }
  return g;
}

}  // namespace hjb
