#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "hjb/ocp.hpp"
#include "hjb/ode.hpp"

namespace hjb {

/// First-order two-point BVP y' = rhs(t, y), boundary(y(a), y(b)) = 0.
struct BvpSystem {
  int dim = 0;
  std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)> rhs;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>
      boundary;
};

struct SolveReport {
  bool converged = false;
  int newton_iterations = 0;
  double final_residual = 0.0;
  int mesh_points = 0;
  double wall_time = 0.0;
  /// Order of the collocation scheme (3-stage Lobatto IIIa).
  int order = 4;
};

/// Guess or solution as a function of time over the solve interval.
using TrajectoryFn = std::function<Eigen::VectorXd(double)>;

struct BvpSolution {
  std::vector<double> mesh;
  std::vector<Eigen::VectorXd> y;
  std::vector<Eigen::VectorXd> f;
  SolveReport report;

  /// Piecewise cubic interpolant of the collocation solution.
  Eigen::VectorXd eval(double t) const { return hermite_eval(mesh, y, f, t); }
  TrajectoryFn interpolant() const;
};

struct BvpOptions {
  /// Scaled collocation-residual tolerance for the Newton iteration.
  double tol = 1e-8;
  /// Interval-scaled defect tolerance driving mesh refinement.
  double defect_tol = 1e-6;
  int initial_intervals = 32;
  int max_newton_per_mesh = 50;
  int max_mesh_points = 10'000;
  int max_halvings = 8;
  /// Nonempty: start from this mesh instead of a uniform one. Must be
  /// strictly increasing with front == a and back == b. Continuation passes
  /// the previous refined mesh here so resolved features stay resolved.
  std::vector<double> initial_mesh;
};

/// Scaled residual of the 3-stage Lobatto IIIa collocation equations plus
/// boundary conditions at a candidate mesh solution:
/// ||F||_inf / (1 + max_k ||y_k||_inf).
double collocation_residual(const BvpSystem& sys,
                            const std::vector<double>& mesh,
                            const std::vector<Eigen::VectorXd>& y);

/// Damped-Newton collocation solve with defect-driven bisection refinement.
/// Throws MaxIterations, SingularJacobian, MeshLimitExceeded, NonFiniteValue.
BvpSolution solve_bvp(const BvpSystem& sys, double a, double b,
                      const TrajectoryFn& guess, const BvpOptions& opts = {});

/// Augmented characteristic system y = (x, lambda, w):
///   x' = f(t, x, u*),  lambda' = -H_x,  w' = -L(t, x, u*)
/// with x(t0) = x0, lambda(tf) = psi_x(x(tf)), w(tf) = psi(x(tf)); w(t) is
/// the cost-to-go, so V(t0, x0) = w(t0).
BvpSystem characteristic_system(const OcpDefinition& ocp, double t0,
                                const Eigen::VectorXd& x0);

/// Constant initial iterate y(t) = (x0, psi_x(x0), psi(x0)).
TrajectoryFn constant_guess(const OcpDefinition& ocp, const Eigen::VectorXd& x0);

/// Characteristic TPBVP solve over [t0, ocp.tf].
BvpSolution solve_tpbvp(const OcpDefinition& ocp, double t0,
                        const Eigen::VectorXd& x0, const TrajectoryFn& guess,
                        double tol = 1e-8);
BvpSolution solve_tpbvp(const OcpDefinition& ocp, double t0,
                        const Eigen::VectorXd& x0, const TrajectoryFn& guess,
                        const BvpOptions& opts);

/// Accessors into an augmented-state vector.
inline Eigen::VectorXd aug_state(const Eigen::VectorXd& y, int n) {
  return y.head(n);
}
inline Eigen::VectorXd aug_costate(const Eigen::VectorXd& y, int n) {
  return y.segment(n, n);
}
inline double aug_cost(const Eigen::VectorXd& y) { return y[y.size() - 1]; }

}  // namespace hjb
