#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "hjb/dual.hpp"
#include "hjb/errors.hpp"
#include "hjb/ocp.hpp"

namespace hjb {

/// Attitude benchmark constants; defaults are the momentum-wheel values
/// used throughout the tests.
struct RigidBodyParams {
  Eigen::Matrix3d inertia = Eigen::Vector3d(2.0, 3.0, 4.0).asDiagonal();
  Eigen::Matrix3d actuator =
      (Eigen::Matrix3d() << 1.0, 1.0 / 20, 1.0 / 10,
                            1.0 / 15, 1.0, 1.0 / 10,
                            1.0 / 10, 1.0 / 15, 1.0).finished();
  Eigen::Vector3d momentum = Eigen::Vector3d::Ones();
  double w1 = 1.0;
  double w2 = 10.0;
  double w3 = 0.5;
  double w4 = 1.0;
  double w5 = 1.0;
  double tf = 20.0;
};

inline constexpr double kGimbalGuard = 1e-6;

/// Euler-angle kinematics matrix E(v); v = (roll, pitch, yaw).
/// Throws GimbalSingularity when |pitch| >= pi/2 - 1e-6.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> euler_kinematics_t(
    const Eigen::Matrix<Scalar, 3, 1>& v) {
  using std::abs;
  using std::cos;
  using std::sin;
  using std::tan;
  if (abs(scalar_value(v[1])) >= M_PI / 2 - kGimbalGuard)
    throw GimbalSingularity("pitch within 1e-6 of pi/2");
  const Scalar sphi = sin(v[0]), cphi = cos(v[0]);
  const Scalar tth = tan(v[1]);
  const Scalar secth = Scalar(1.0) / cos(v[1]);
  Eigen::Matrix<Scalar, 3, 3> e;
  e << Scalar(1.0), sphi * tth, cphi * tth,
       Scalar(0.0), cphi, -sphi,
       Scalar(0.0), sphi * secth, cphi * secth;
  return e;
}

/// S(omega) with S(1,2) = omega_3; satisfies S + S^T = 0.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> skew_t(const Eigen::Matrix<Scalar, 3, 1>& w) {
  Eigen::Matrix<Scalar, 3, 3> s;
  s << Scalar(0.0), w[2], -w[1],
       -w[2], Scalar(0.0), w[0],
       w[1], -w[0], Scalar(0.0);
  return s;
}

/// Body-frame rotation matrix R(v) for the (1,2,3) Euler sequence.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> rotation_t(const Eigen::Matrix<Scalar, 3, 1>& v) {
  using std::cos;
  using std::sin;
  const Scalar sphi = sin(v[0]), cphi = cos(v[0]);
  const Scalar sth = sin(v[1]), cth = cos(v[1]);
  const Scalar spsi = sin(v[2]), cpsi = cos(v[2]);
  Eigen::Matrix<Scalar, 3, 3> r;
  r << cth * cpsi, cth * spsi, -sth,
       sphi * sth * cpsi - cphi * spsi, sphi * sth * spsi + cphi * cpsi,
       cth * sphi,
       cphi * sth * cpsi + sphi * spsi, cphi * sth * spsi - sphi * cpsi,
       cth * cphi;
  return r;
}

/// x = (v, omega); xdot = (E(v) omega, J^{-1}(S(omega) R(v) h + B u)).
template <typename Scalar>
Eigen::Matrix<Scalar, 6, 1> rigid_body_rhs_t(
    const Eigen::Matrix<Scalar, 6, 1>& x, const Eigen::Matrix<Scalar, 3, 1>& u,
    const RigidBodyParams& p) {
  const Eigen::Matrix<Scalar, 3, 1> v = x.template head<3>();
  const Eigen::Matrix<Scalar, 3, 1> w = x.template tail<3>();
  const Eigen::Matrix3d j_inv = p.inertia.inverse();
  Eigen::Matrix<Scalar, 6, 1> dx;
  dx.template head<3>() = euler_kinematics_t<Scalar>(v) * w;
  dx.template tail<3>() =
      j_inv.cast<Scalar>() *
      (skew_t<Scalar>(w) * (rotation_t<Scalar>(v) * p.momentum.cast<Scalar>()) +
       p.actuator.cast<Scalar>() * u);
  return dx;
}

Eigen::Matrix3d euler_kinematics(const Eigen::Vector3d& v);
Eigen::Matrix3d skew(const Eigen::Vector3d& omega);
Eigen::Matrix3d rotation(const Eigen::Vector3d& v);

Eigen::Matrix<double, 6, 1> rigid_body_rhs(double t,
                                           const Eigen::Matrix<double, 6, 1>& x,
                                           const Eigen::Vector3d& u,
                                           const RigidBodyParams& p);

/// Minimizer of H over u for the quadratic running cost:
/// u* = -(1/W3) B^T J^{-1} lambda_omega.
Eigen::Vector3d rigid_body_optimal_control(const Eigen::Matrix<double, 6, 1>& lambda,
                                           const RigidBodyParams& p);

/// Full problem assembly: quadratic costs, closed-form u*, dual-based
/// costate rate, sampling box |v_i| <= pi/3, |omega_i| <= pi/4.
OcpDefinition make_rigid_body_problem(const RigidBodyParams& p = {});

}  // namespace hjb
