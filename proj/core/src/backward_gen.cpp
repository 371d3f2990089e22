#include "hjb/backward_gen.hpp"

#include <algorithm>
#include <cmath>

#include "hjb/errors.hpp"
#include "hjb/marching.hpp"
#include "hjb/parallel.hpp"
#include "hjb/rng.hpp"

namespace hjb {

BackwardGenResult generate_backward(const OcpDefinition& ocp,
                                    const BvpSolution& nominal,
                                    const BackwardGenOptions& opts) {
  if (opts.count < 1) throw ConfigError("generate_backward: count must be >= 1");
  if (opts.radius < 0.0)
    throw ConfigError("generate_backward: radius must be >= 0");
  const int n = ocp.state_dim;
  const double tf = nominal.mesh.back();
  const double t0 = nominal.mesh.front();
  const Eigen::VectorXd x_tf_nominal = nominal.y.back().head(n);
  const BvpSystem sys = characteristic_system(ocp, t0, x_tf_nominal);

  struct DrawResult {
    OdeSolution traj;
    bool ok = false;
    bool truncated = false;
  };
  std::vector<DrawResult> draws(static_cast<std::size_t>(opts.count));

  parallel_for(
      static_cast<std::size_t>(opts.count), opts.workers,
      [&](std::size_t i) {
        Rng rng(derive_seed(opts.seed, i));
        const Eigen::VectorXd x_tf =
            x_tf_nominal + rng.uniform_in_ball(n, opts.radius);
        Eigen::VectorXd y_tf(2 * n + 1);
        y_tf.head(n) = x_tf;
        y_tf.segment(n, n) = ocp.terminal_cost_gradient(x_tf);
        y_tf[2 * n] = ocp.terminal_cost(x_tf);

        // Growth monitor on (x, lambda); the floor keeps near-equilibrium
        // terminal states from tripping on roundoff.
        const double norm_tf = y_tf.head(2 * n).norm();
        const double guard = opts.norm_growth_factor * std::max(norm_tf, 1e-3);

        IntegrateOptions iopts;
        iopts.rtol = opts.rtol;
        iopts.atol = opts.atol;
        iopts.stop_when = [n, guard](double, const Eigen::VectorXd& y) {
          return y.head(2 * n).norm() > guard;
        };
        try {
          draws[i].traj = rk45_adaptive(sys.rhs, tf, t0, y_tf, iopts);
          draws[i].truncated = draws[i].traj.truncated;
          draws[i].ok = draws[i].traj.size() >= 2;
        } catch (const Error&) {
          draws[i].ok = false;
        }
      });

  BackwardGenResult out;
  out.report.requested = opts.count;
  for (auto& d : draws) {
    if (!d.ok) {
      ++out.report.discarded;
      continue;
    }
    ++out.report.kept;
    if (d.truncated) ++out.report.truncated;
    for (std::size_t k = 0; k < d.traj.size(); ++k) {
      Sample s;
      s.t = d.traj.mesh[k];
      s.x = d.traj.states[k].head(n);
      s.lambda = d.traj.states[k].segment(n, n);
      s.v = d.traj.states[k][2 * n];
      s.src = "backward";
      out.samples.push_back(std::move(s));
    }
    out.trajectories.push_back(std::move(d.traj));
  }
  if (out.report.kept == 0)
    throw AllSolvesFailed("generate_backward: every trajectory diverged");

  // Spot check: re-solve selected recorded points by marching (independent
  // of the backward integration) and compare V. The checked point is the
  // earliest-time sample still inside the sampling box; points outside X0
  // carry no training weight.
  const int n_checks = static_cast<int>(
      std::ceil(opts.verify_fraction * out.report.kept));
  for (int c = 0; c < n_checks; ++c) {
    const std::size_t idx =
        static_cast<std::size_t>(c) * out.trajectories.size() /
        static_cast<std::size_t>(n_checks);
    const OdeSolution& traj = out.trajectories[idx];
    std::size_t pick = traj.size() / 2;
    for (std::size_t k = traj.size(); k-- > 0;) {
      // Meshes descend from tf, so the largest index is the earliest time.
      if (ocp.sample_domain.contains(traj.states[k].head(n))) {
        pick = k;
        break;
      }
    }
    const double t = traj.mesh[pick];
    const Eigen::VectorXd x = traj.states[pick].head(n);
    const double v_bwd = traj.states[pick][2 * n];
    ++out.report.checks_run;
    try {
      const BvpSolution check = march(ocp, t, x);
      const double v_ref = aug_cost(check.y.front());
      const double rel =
          std::abs(v_bwd - v_ref) / std::max(std::abs(v_ref), 1e-6);
      if (rel > opts.verify_rel_tol) ++out.report.checks_failed;
    } catch (const Error&) {
      ++out.report.checks_failed;
    }
  }
  if (out.report.checks_run > 0 &&
      static_cast<double>(out.report.checks_failed) / out.report.checks_run >
          opts.reject_fraction)
    throw DatasetRejected(
        "generate_backward: " + std::to_string(out.report.checks_failed) +
        " of " + std::to_string(out.report.checks_run) +
        " TPBVP spot checks disagreed");
  return out;
}

}  // namespace hjb
