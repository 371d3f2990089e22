#pragma once

#include <Eigen/Core>
#include <utility>

namespace hjb {

/// Legendre-Gauss-Lobatto grid on [-1, 1]: endpoints plus the roots of
/// L'_N, quadrature weights, and the spectral differentiation matrix.
struct LglGrid {
  int order = 0;
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
  Eigen::MatrixXd diff;
};

/// (L_N(x), L'_N(x)) by the three-term recurrence.
std::pair<double, double> legendre_pair(int n, double x);

/// Nodes by Newton iteration on L'_N from cosine-spaced guesses (then
/// symmetrized); weights w_k = 2 / (N(N+1) L_N(t_k)^2); differentiation
/// matrix with exactly vanishing row sums. Throws NewtonFailure if a root
/// fails to converge.
LglGrid lgl_grid(int order);

}  // namespace hjb
