#pragma once

#include "hjb/ocp.hpp"

namespace hjb {

/// Scalar problem xdot = u, L = (x^2 + u^2)/2, psi = x^2/2. The Riccati
/// solution is the fixed point p(t) = 1 for every horizon, so
/// V(t, x) = x^2/2, lambda(t) = x(t), u* = -lambda, and the optimal state
/// decays as x0 * exp(-(t - t0)). Costate dynamics are hand-derived.
OcpDefinition make_lqr_problem(double tf = 1.0, double t0 = 0.0);

}  // namespace hjb
