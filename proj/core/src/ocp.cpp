#include "hjb/ocp.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "hjb/errors.hpp"

namespace hjb {

bool Box::contains(const Eigen::VectorXd& x) const {
  if (x.size() != lo.size()) return false;
  return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
}

Eigen::VectorXd Box::sample(Rng& rng) const {
  Eigen::VectorXd x(lo.size());
  for (Eigen::Index i = 0; i < lo.size(); ++i) x[i] = rng.uniform(lo[i], hi[i]);
  return x;
}

double hamiltonian(const OcpDefinition& ocp, double t, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& lambda, const Eigen::VectorXd& u) {
  return ocp.running_cost(t, x, u) + lambda.dot(ocp.dynamics(t, x, u));
}

double hamiltonian_opt(const OcpDefinition& ocp, double t,
                       const Eigen::VectorXd& x,
                       const Eigen::VectorXd& lambda) {
  return hamiltonian(ocp, t, x, lambda, ocp.optimal_control(t, x, lambda));
}

Eigen::VectorXd control_gradient(const OcpDefinition& ocp, double t,
                                 const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& lambda,
                                 const Eigen::VectorXd& u) {
  const DualVector xd = to_dual(x);
  auto h_of_u = [&](const DualVector& ud) -> Dual {
    Dual h = ocp.running_cost_dual(t, xd, ud);
    const DualVector f = ocp.dynamics_dual(t, xd, ud);
    for (Eigen::Index i = 0; i < f.size(); ++i) h += lambda[i] * f[i];
    return h;
  };
  return dual_diff([&](const DualVector& ud) { return h_of_u(ud); }, u).second;
}

Eigen::VectorXd costate_rhs_from_duals(const OcpDefinition& ocp, double t,
                                       const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& lambda) {
  const Eigen::VectorXd u = ocp.optimal_control(t, x, lambda);
  const DualVector ud = to_dual(u);
  auto h_of_x = [&](const DualVector& xd) -> Dual {
    Dual h = ocp.running_cost_dual(t, xd, ud);
    const DualVector f = ocp.dynamics_dual(t, xd, ud);
    for (Eigen::Index i = 0; i < f.size(); ++i) h += lambda[i] * f[i];
    return h;
  };
  return -dual_diff([&](const DualVector& xd) { return h_of_x(xd); }, x).second;
}

Eigen::VectorXd numeric_optimal_control(const OcpDefinition& ocp, double t,
                                        const Eigen::VectorXd& x,
                                        const Eigen::VectorXd& lambda,
                                        const Eigen::VectorXd& u_init,
                                        int max_iters, double tol) {
  Eigen::VectorXd u = u_init;
  const int m = static_cast<int>(u.size());
  for (int it = 0; it < max_iters; ++it) {
    const Eigen::VectorXd g = control_gradient(ocp, t, x, lambda, u);
    if (g.norm() <= tol) return u;
    // Finite-difference Jacobian of the (exact) gradient.
    Eigen::MatrixXd hess(m, m);
    const double base = 1e-6 * std::max(1.0, u.norm());
    for (int j = 0; j < m; ++j) {
      Eigen::VectorXd up = u;
      up[j] += base;
      hess.col(j) = (control_gradient(ocp, t, x, lambda, up) - g) / base;
    }
    Eigen::VectorXd step = hess.fullPivLu().solve(-g);
    if (!step.allFinite()) step = -g;
    // Backtrack on the gradient norm.
    double alpha = 1.0;
    const double g0 = g.norm();
    for (int k = 0; k < 30; ++k) {
      const Eigen::VectorXd trial = u + alpha * step;
      if (control_gradient(ocp, t, x, lambda, trial).norm() < g0) {
        u = trial;
        break;
      }
      alpha *= 0.5;
      if (k == 29) u += alpha * step;
    }
  }
  const Eigen::VectorXd g = control_gradient(ocp, t, x, lambda, u);
  if (g.norm() > std::sqrt(tol))
    throw NoConvergence("numeric_optimal_control: stationarity not reached");
  return u;
}

}  // namespace hjb
