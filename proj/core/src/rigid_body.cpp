#include "hjb/rigid_body.hpp"

#include <Eigen/Cholesky>

namespace hjb {

Eigen::Matrix3d euler_kinematics(const Eigen::Vector3d& v) {
  return euler_kinematics_t<double>(v);
}

Eigen::Matrix3d skew(const Eigen::Vector3d& omega) {
  return skew_t<double>(omega);
}

Eigen::Matrix3d rotation(const Eigen::Vector3d& v) {
  return rotation_t<double>(v);
}

Eigen::Matrix<double, 6, 1> rigid_body_rhs(double /*t*/,
                                           const Eigen::Matrix<double, 6, 1>& x,
                                           const Eigen::Vector3d& u,
                                           const RigidBodyParams& p) {
  return rigid_body_rhs_t<double>(x, u, p);
}

Eigen::Vector3d rigid_body_optimal_control(
    const Eigen::Matrix<double, 6, 1>& lambda, const RigidBodyParams& p) {
  const Eigen::Vector3d lam_omega = lambda.tail<3>();
  return -(1.0 / p.w3) * p.actuator.transpose() *
         (p.inertia.inverse() * lam_omega);
}

OcpDefinition make_rigid_body_problem(const RigidBodyParams& p) {
  if (!p.inertia.isApprox(p.inertia.transpose(), 1e-12))
    throw ConfigError("rigid body inertia must be symmetric");
  Eigen::LLT<Eigen::Matrix3d> llt(p.inertia);
  if (llt.info() != Eigen::Success)
    throw ConfigError("rigid body inertia must be positive definite");
  if (p.w3 <= 0.0) throw ConfigError("control weight W3 must be positive");

  OcpDefinition ocp;
  ocp.name = "rigid_body";
  ocp.state_dim = 6;
  ocp.control_dim = 3;
  ocp.t0 = 0.0;
  ocp.tf = p.tf;

  const Eigen::Matrix3d j_inv = p.inertia.inverse();
  const Eigen::Matrix3d gain = -(1.0 / p.w3) * p.actuator.transpose() * j_inv;

  ocp.dynamics = [p, j_inv](double, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& u) -> Eigen::VectorXd {
    const Eigen::Vector3d v = x.head<3>();
    const Eigen::Vector3d w = x.tail<3>();
    Eigen::VectorXd dx(6);
    dx.head<3>() = euler_kinematics_t<double>(v) * w;
    dx.tail<3>() = j_inv * (skew_t<double>(w) * (rotation_t<double>(v) *
                                                 p.momentum) +
                            p.actuator * u);
    return dx;
  };
  ocp.dynamics_dual = [p, j_inv](double, const DualVector& x,
                                 const DualVector& u) -> DualVector {
    using V3 = Eigen::Matrix<Dual, 3, 1>;
    const V3 v = x.head<3>();
    const V3 w = x.tail<3>();
    DualVector dx(6);
    dx.head<3>() = euler_kinematics_t<Dual>(v) * w;
    dx.tail<3>() =
        j_inv.cast<Dual>() *
        (skew_t<Dual>(w) * (rotation_t<Dual>(v) * p.momentum.cast<Dual>()) +
         p.actuator.cast<Dual>() * u.head<3>());
    return dx;
  };
  ocp.running_cost = [p](double, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& u) -> double {
    return 0.5 * p.w1 * x.head<3>().squaredNorm() +
           0.5 * p.w2 * x.tail<3>().squaredNorm() +
           0.5 * p.w3 * u.squaredNorm();
  };
  ocp.running_cost_dual = [p](double, const DualVector& x,
                              const DualVector& u) -> Dual {
    Dual acc(0.0);
    for (int i = 0; i < 3; ++i) acc += 0.5 * p.w1 * x[i] * x[i];
    for (int i = 3; i < 6; ++i) acc += 0.5 * p.w2 * x[i] * x[i];
    for (int i = 0; i < 3; ++i) acc += 0.5 * p.w3 * u[i] * u[i];
    return acc;
  };
  ocp.terminal_cost = [p](const Eigen::VectorXd& x) -> double {
    return 0.5 * p.w4 * x.head<3>().squaredNorm() +
           0.5 * p.w5 * x.tail<3>().squaredNorm();
  };
  ocp.terminal_cost_gradient = [p](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    Eigen::VectorXd g(6);
    g.head<3>() = p.w4 * x.head<3>();
    g.tail<3>() = p.w5 * x.tail<3>();
    return g;
  };
  ocp.optimal_control = [gain](double, const Eigen::VectorXd&,
                               const Eigen::VectorXd& lambda) -> Eigen::VectorXd {
    return gain * lambda.tail<3>();
  };

  // -H_x by forward-mode differentiation of H = L + lambda^T f; u is held
  // fixed at u*, which is exact at the minimizer.
  auto dyn_dual = ocp.dynamics_dual;
  auto cost_dual = ocp.running_cost_dual;
  auto u_star = ocp.optimal_control;
  ocp.costate_rhs = [dyn_dual, cost_dual, u_star](
                        double t, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& lambda) -> Eigen::VectorXd {
    const Eigen::VectorXd u = u_star(t, x, lambda);
    const DualVector ud = to_dual(u);
    auto h_of_x = [&](const DualVector& xd) -> Dual {
      Dual h = cost_dual(t, xd, ud);
      const DualVector f = dyn_dual(t, xd, ud);
      for (Eigen::Index i = 0; i < f.size(); ++i) h += lambda[i] * f[i];
      return h;
    };
    return -dual_diff(h_of_x, x).second;
  };

  ocp.sample_domain.lo = Eigen::VectorXd(6);
  ocp.sample_domain.hi = Eigen::VectorXd(6);
  ocp.sample_domain.lo << -M_PI / 3, -M_PI / 3, -M_PI / 3, -M_PI / 4,
      -M_PI / 4, -M_PI / 4;
  ocp.sample_domain.hi = -ocp.sample_domain.lo;
  return ocp;
}

}  // namespace hjb
