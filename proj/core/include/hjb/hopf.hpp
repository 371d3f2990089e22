#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>

namespace hjb {

// Scalar function of a vector argument together with its gradient.
struct ScalarField {
  int dim = 0;
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
};

// f(x) = x^T A x / 2 + b^T x + c with A symmetric positive definite.
struct QuadraticForm {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  double c = 0.0;

  double value(const Eigen::VectorXd& x) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;
  // Closed-form convex conjugate f*(z) = (z-b)^T A^{-1} (z-b)/2 - c.
  QuadraticForm conjugate() const;
  ScalarField field() const;
};

// Terminal-value Hopf problem V_t + H(V_x) = 0, V(0,.) = psi, psi convex.
struct HopfProblem {
  int dim = 0;
  ScalarField hamiltonian;              // H(p), state independent
  ScalarField initial;                  // psi(x), convex
  std::optional<ScalarField> conjugate; // psi*(z) when a closed form exists
};

// Building from a quadratic psi registers its closed-form conjugate.
HopfProblem make_hopf_problem(const QuadraticForm& psi, ScalarField hamiltonian);
HopfProblem make_hopf_problem(ScalarField psi, ScalarField hamiltonian);

// psi = |x|^2/2, H(p) = |p|^2/2; V(t,x) = |x|^2 / (2(1+t)).
HopfProblem make_quadratic_hopf(int dim);

struct HopfOptions {
  int starts = 8;
  std::uint64_t seed = 0;
  double gtol = 1e-8;
  double unbounded_threshold = 1e12;
  int max_iters = 500;
};

struct ConjugateResult {
  double value = 0.0;
  Eigen::VectorXd arg; // attaining maximizer, equals grad f*(z)
};

// f*(z) = sup_x { x.z - f(x) } by multi-start quasi-Newton ascent.
ConjugateResult fenchel_conjugate(const ScalarField& f, const Eigen::VectorXd& z,
                                  const HopfOptions& opts = {});

// V(t,x) = -min_v { psi*(v) + t H(v) - x.v }.
double hopf_solve(const HopfProblem& problem, double t, const Eigen::VectorXd& x,
                  const HopfOptions& opts = {});

// Midpoint-convexity probe on random pairs inside [-radius, radius]^dim.
bool midpoint_convex(const ScalarField& f, double radius, int pairs, std::uint64_t seed);

}  // namespace hjb
