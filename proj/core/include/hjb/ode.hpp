#pragma once

#include <Eigen/Core>
#include <functional>
#include <limits>
#include <vector>

#include "hjb/errors.hpp"

namespace hjb {

using OdeRhs = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

/// Piecewise cubic Hermite evaluation on a monotone mesh (ascending or
/// descending); clamps outside the span and is exact at the nodes.
Eigen::VectorXd hermite_eval(const std::vector<double>& mesh,
                             const std::vector<Eigen::VectorXd>& states,
                             const std::vector<Eigen::VectorXd>& derivs,
                             double t);

/// Trajectory on a strictly increasing mesh with cubic Hermite dense output.
struct OdeSolution {
  std::vector<double> mesh;
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> derivs;
  /// True when integration stopped early because the max_norm guard tripped;
  /// the stored samples cover only the portion before the trip.
  bool truncated = false;

  std::size_t size() const { return mesh.size(); }
  double t_front() const { return mesh.front(); }
  double t_back() const { return mesh.back(); }

  /// Cubic Hermite interpolation; reproduces stored states exactly at nodes.
  Eigen::VectorXd dense_eval(double t) const;
};

struct IntegrateOptions {
  double rtol = 1e-8;
  double atol = 1e-10;
  /// Stop early (marking the solution truncated) when the state norm
  /// exceeds this.
  double max_norm = std::numeric_limits<double>::infinity();
  /// Optional extra guard; returning true after an accepted step stops the
  /// integration early with truncated = true.
  std::function<bool(double, const Eigen::VectorXd&)> stop_when;
  long max_steps = 10'000'000;
  double initial_step_fraction = 1e-3;
};

/// Classical fixed-step 4th-order Runge-Kutta. t_end < t_start integrates
/// backward via the reparameterization s = -t.
OdeSolution rk4(const OdeRhs& rhs, double t_start, double t_end,
                const Eigen::VectorXd& x0, int steps);

/// Dormand-Prince 5(4) with embedded error control. Accepted steps form the
/// mesh. Throws StepUnderflow when the step drops below 1e-14 * span and
/// NonFiniteValue (with the blow-up time) on non-finite states.
OdeSolution rk45_adaptive(const OdeRhs& rhs, double t_start, double t_end,
                          const Eigen::VectorXd& x0, double rtol, double atol);
OdeSolution rk45_adaptive(const OdeRhs& rhs, double t_start, double t_end,
                          const Eigen::VectorXd& x0, const IntegrateOptions& opts);

}  // namespace hjb
