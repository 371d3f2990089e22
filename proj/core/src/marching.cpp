#include "hjb/marching.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hjb/errors.hpp"

namespace hjb {

TrajectoryFn extend_piecewise(const BvpSolution& sol, double t_next) {
  const double t_k = sol.mesh.back();
  (void)t_next;
  auto interp = sol.interpolant();
  return [interp, t_k](double t) { return interp(std::min(t, t_k)); };
}

TrajectoryFn extend_linear(const BvpSolution& sol, double t_next) {
  const double t0 = sol.mesh.front();
  const double t_k = sol.mesh.back();
  const double ratio = (t_k - t0) / (t_next - t0);
  auto interp = sol.interpolant();
  return [interp, t0, ratio](double t) { return interp(t0 + ratio * (t - t0)); };
}

namespace {

BvpSolution attempt(const OcpDefinition& ocp, double t0,
                    const Eigen::VectorXd& x0, double horizon,
                    const TrajectoryFn& guess, const BvpOptions& opts) {
  OcpDefinition sub = ocp;
  sub.tf = horizon;
  return solve_tpbvp(sub, t0, x0, guess, opts);
}

}  // namespace

BvpSolution march(const OcpDefinition& ocp, double t0,
                  const Eigen::VectorXd& x0, const MarchSchedule& schedule,
                  ExtensionKind extension, const BvpOptions& bvp_opts) {
  const double tf = ocp.tf;
  if (!(t0 < tf)) throw ConfigError("march: t0 must be below tf");
  const bool explicit_times = !schedule.times.empty();
  if (explicit_times) {
    if (!std::is_sorted(schedule.times.begin(), schedule.times.end()))
      throw ConfigError("march: schedule times must be ascending");
    if (std::abs(schedule.times.back() - tf) > 1e-12)
      throw ConfigError("march: last schedule time must equal tf");
    if (schedule.times.front() <= t0)
      throw ConfigError("march: first schedule time must exceed t0");
  }

  auto extend = [&](const BvpSolution& sol, double t_next) -> TrajectoryFn {
    return extension == ExtensionKind::kPiecewise
               ? extend_piecewise(sol, t_next)
               : extend_linear(sol, t_next);
  };

  BvpSolution sol;
  bool have_sol = false;
  double cur_t = t0;
  double increment = explicit_times
                         ? 0.0
                         : schedule.initial_frac * (tf - t0);
  std::size_t next_idx = 0;

  while (cur_t < tf) {
    double target = explicit_times
                        ? schedule.times[next_idx]
                        : std::min(cur_t + increment, tf);
    int retries = 0;
    while (true) {
      const TrajectoryFn guess =
          have_sol ? extend(sol, target) : constant_guess(ocp, x0);
      // Carry the refined mesh of the previous leg forward and append a
      // tail over the new segment at the leg's average spacing; a fresh
      // uniform mesh would un-resolve the transient already captured.
      BvpOptions leg_opts = bvp_opts;
      if (have_sol) {
        leg_opts.initial_mesh = sol.mesh;
        const double t_k = sol.mesh.back();
        const double h_avg =
            (t_k - t0) / static_cast<double>(sol.mesh.size() - 1);
        const int n_tail = std::max(
            4, static_cast<int>(std::ceil((target - t_k) / h_avg)));
        for (int j = 1; j <= n_tail; ++j)
          leg_opts.initial_mesh.push_back(t_k +
                                          (target - t_k) * j / n_tail);
      }
      try {
        sol = attempt(ocp, t0, x0, target, guess, leg_opts);
        have_sol = true;
        break;
      } catch (const Error& e) {
        if (++retries > schedule.max_retries) {
          std::ostringstream os;
          os << "continuation stalled at horizon " << cur_t << ": "
             << e.what();
          throw ContinuationFailed(os.str(), cur_t);
        }
        target = cur_t + 0.5 * (target - cur_t);
        if (target <= cur_t * (1.0 + 1e-15) + 1e-300) {
          std::ostringstream os;
          os << "continuation increment underflow at horizon " << cur_t;
          throw ContinuationFailed(os.str(), cur_t);
        }
      }
    }
    if (!explicit_times)
      increment = schedule.growth_factor * (target - cur_t);
    cur_t = target;
    if (explicit_times && cur_t >= schedule.times[next_idx] - 1e-12)
      ++next_idx;
  }
  return sol;
}

}  // namespace hjb
