#pragma once

#include <vector>

#include "hjb/collocation.hpp"
#include "hjb/ocp.hpp"

namespace hjb {

/// Horizon continuation plan. With explicit times the solver visits them in
/// order (last must equal tf); otherwise horizons grow geometrically from
/// initial_frac * (tf - t0) by growth_factor, capped at tf. On failure the
/// pending increment is halved, up to max_retries per step.
struct MarchSchedule {
  std::vector<double> times;
  double initial_frac = 0.05;
  double growth_factor = 2.0;
  int max_retries = 6;
};

enum class ExtensionKind { kPiecewise, kLinear };

/// Guess on [t0, t_next] equal to sol on [t0, t_k] and frozen at sol(t_k)
/// beyond it.
TrajectoryFn extend_piecewise(const BvpSolution& sol, double t_next);

/// Time-rescaled replay: guess(t) = sol(t0 + (t_k - t0)/(t_next - t0) * (t - t0)).
TrajectoryFn extend_linear(const BvpSolution& sol, double t_next);

/// Solves the characteristic TPBVP by growing the horizon, extending each
/// converged solution as the next guess. Throws ContinuationFailed with the
/// last horizon reached when retries are exhausted.
BvpSolution march(const OcpDefinition& ocp, double t0,
                  const Eigen::VectorXd& x0, const MarchSchedule& schedule = {},
                  ExtensionKind extension = ExtensionKind::kPiecewise,
                  const BvpOptions& bvp_opts = {});

}  // namespace hjb
