#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>

#include "hjb/dual.hpp"
#include "hjb/rng.hpp"

namespace hjb {

/// Axis-aligned box in state space; the sampling domain for initial states.
struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  Eigen::Index dim() const { return lo.size(); }
  bool contains(const Eigen::VectorXd& x) const;
  Eigen::VectorXd center() const { return 0.5 * (lo + hi); }
  Eigen::VectorXd half_width() const { return 0.5 * (hi - lo); }
  Eigen::VectorXd sample(Rng& rng) const;
};

using DynamicsFn = std::function<Eigen::VectorXd(
    double, const Eigen::VectorXd&, const Eigen::VectorXd&)>;
using DynamicsDualFn =
    std::function<DualVector(double, const DualVector&, const DualVector&)>;
using RunningCostFn =
    std::function<double(double, const Eigen::VectorXd&, const Eigen::VectorXd&)>;
using RunningCostDualFn =
    std::function<Dual(double, const DualVector&, const DualVector&)>;
using FeedbackFn = std::function<Eigen::VectorXd(
    double, const Eigen::VectorXd&, const Eigen::VectorXd&)>;

/// Fixed-horizon optimal-control problem
///   min ∫ L(t,x,u) dt + ψ(x(tf))   s.t.  ẋ = f(t,x,u),  x(t0) = x0,
/// together with the maps needed by the characteristic system: the
/// minimizer u*(t,x,λ) of the Hamiltonian H = L + λᵀf and the costate
/// rate −H_x. The dual-valued dynamics/cost paths expose exact derivatives
/// for gradient assembly; they must agree with the double-valued paths.
struct OcpDefinition {
  std::string name;
  int state_dim = 0;
  int control_dim = 0;
  double t0 = 0.0;
  double tf = 1.0;

  DynamicsFn dynamics;
  DynamicsDualFn dynamics_dual;
  RunningCostFn running_cost;
  RunningCostDualFn running_cost_dual;
  std::function<double(const Eigen::VectorXd&)> terminal_cost;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> terminal_cost_gradient;
  /// u*(t, x, λ): argmin over u of H(t, x, λ, u).
  FeedbackFn optimal_control;
  /// λ̇ = −H_x(t, x, λ) evaluated at u = u*(t, x, λ).
  FeedbackFn costate_rhs;
  Box sample_domain;
};

/// Point value of the solution: V(t,x) with its costate λ = V_x(t,x).
struct Sample {
  double t = 0.0;
  Eigen::VectorXd x;
  double v = 0.0;
  Eigen::VectorXd lambda;
  std::string src;
};

/// H(t, x, λ, u) = L + λᵀf.
double hamiltonian(const OcpDefinition& ocp, double t, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& lambda, const Eigen::VectorXd& u);

/// H at the optimal control u*(t, x, λ).
double hamiltonian_opt(const OcpDefinition& ocp, double t,
                       const Eigen::VectorXd& x, const Eigen::VectorXd& lambda);

/// ∇_u H via the dual-valued paths (exact). Requires dynamics_dual and
/// running_cost_dual.
Eigen::VectorXd control_gradient(const OcpDefinition& ocp, double t,
                                 const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& lambda,
                                 const Eigen::VectorXd& u);

/// −H_x built from the dual-valued paths; u held at u*(t,x,λ) while x is
/// differentiated (envelope term vanishes only at the minimizer, so this is
/// exactly −H_x of the reduced Hamiltonian).
Eigen::VectorXd costate_rhs_from_duals(const OcpDefinition& ocp, double t,
                                       const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& lambda);

/// Numeric minimizer fallback for problems without a closed-form u*:
/// damped Newton on the dual gradient of u ↦ H.
Eigen::VectorXd numeric_optimal_control(const OcpDefinition& ocp, double t,
                                        const Eigen::VectorXd& x,
                                        const Eigen::VectorXd& lambda,
                                        const Eigen::VectorXd& u_init,
                                        int max_iters = 50, double tol = 1e-12);

}  // namespace hjb
