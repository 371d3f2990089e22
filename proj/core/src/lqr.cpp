#include "hjb/lqr.hpp"

#include "hjb/errors.hpp"

namespace hjb {

OcpDefinition make_lqr_problem(double tf, double t0) {
  if (!(tf > t0)) throw ConfigError("lqr: tf must exceed t0");
  OcpDefinition ocp;
  ocp.name = "lqr";
  ocp.state_dim = 1;
  ocp.control_dim = 1;
  ocp.t0 = t0;
  ocp.tf = tf;
  ocp.dynamics = [](double, const Eigen::VectorXd&,
                    const Eigen::VectorXd& u) -> Eigen::VectorXd { return u; };
  ocp.dynamics_dual = [](double, const DualVector&,
                         const DualVector& u) -> DualVector { return u; };
  ocp.running_cost = [](double, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& u) -> double {
    return 0.5 * (x[0] * x[0] + u[0] * u[0]);
  };
  ocp.running_cost_dual = [](double, const DualVector& x,
                             const DualVector& u) -> Dual {
    return 0.5 * (x[0] * x[0] + u[0] * u[0]);
  };
  ocp.terminal_cost = [](const Eigen::VectorXd& x) -> double {
    return 0.5 * x[0] * x[0];
  };
  ocp.terminal_cost_gradient = [](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return x;
  };
  ocp.optimal_control = [](double, const Eigen::VectorXd&,
                           const Eigen::VectorXd& lambda) -> Eigen::VectorXd {
    return -lambda;
  };
  // H = (x^2 + u^2)/2 + lambda u, so H_x = x.
  ocp.costate_rhs = [](double, const Eigen::VectorXd& x,
                       const Eigen::VectorXd&) -> Eigen::VectorXd {
    return -x;
  };
  ocp.sample_domain.lo = Eigen::VectorXd::Constant(1, -1.0);
  ocp.sample_domain.hi = Eigen::VectorXd::Constant(1, 1.0);
  return ocp;
}

}  // namespace hjb
