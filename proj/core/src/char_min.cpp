#include "hjb/char_min.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hjb/errors.hpp"
#include "hjb/ode.hpp"
#include "hjb/optimize.hpp"
#include "hjb/rng.hpp"

namespace hjb {

double characteristic_cost(const OcpDefinition& ocp, double t0, const Eigen::VectorXd& x0,
                           const Eigen::VectorXd& lambda0, double rtol, double atol) {
  const int n = ocp.state_dim;
  Eigen::VectorXd y0(2 * n + 1);
  y0.head(n) = x0;
  y0.segment(n, n) = lambda0;
  y0[2 * n] = 0.0;  // running-cost accumulator w, dw/dt = -L

  OdeRhs rhs = [&ocp, n](double t, const Eigen::VectorXd& y) {
    const Eigen::VectorXd x = y.head(n);
    const Eigen::VectorXd lam = y.segment(n, n);
    const Eigen::VectorXd u = ocp.optimal_control(t, x, lam);
    Eigen::VectorXd dy(2 * n + 1);
    dy.head(n) = ocp.dynamics(t, x, u);
    dy.segment(n, n) = ocp.costate_rhs(t, x, lam);
    dy[2 * n] = -ocp.running_cost(t, x, u);
    return dy;
  };

  IntegrateOptions opts;
  opts.rtol = rtol;
  opts.atol = atol;
  // Diverging candidates are cut off early instead of integrated to the end.
  opts.max_norm = 1e6 * std::max(1.0, y0.norm());

  OdeSolution sol;
  try {
    sol = rk45_adaptive(rhs, t0, ocp.tf, y0, opts);
  } catch (const Error&) {
    return std::numeric_limits<double>::infinity();
  }
  if (sol.truncated) return std::numeric_limits<double>::infinity();

  const Eigen::VectorXd yf = sol.states.back();
  const double cost = ocp.terminal_cost(yf.head(n)) - yf[2 * n];
  return std::isfinite(cost) ? cost : std::numeric_limits<double>::infinity();
}

CharMinResult char_min_value(const OcpDefinition& ocp, double t0, const Eigen::VectorXd& x0,
                             const CharMinOptions& opts) {
  if (opts.starts < 1) throw ConfigError("char_min_value requires starts >= 1");
  const int n = ocp.state_dim;
  if (x0.size() != n)
    throw ConfigError("char_min_value: x0 has dimension " +
                      std::to_string(x0.size()) + ", expected " +
                      std::to_string(n));

  long long evals = 0;
  int failed = 0;
  ObjectiveFn objective = [&](const Eigen::VectorXd& lam) {
    ++evals;
    const double j = characteristic_cost(ocp, t0, x0, lam, opts.rtol, opts.atol);
    if (!std::isfinite(j)) ++failed;
    return j;
  };

  const Eigen::VectorXd psi_x = ocp.terminal_cost_gradient(x0);
  const double scale = std::max(1.0, psi_x.lpNorm<Eigen::Infinity>());

  PowellOptions popts;
  popts.max_iters = opts.powell_iters;
  popts.ftol = opts.tol;
  popts.line_tol = 1e-8;
  CoordinateDescentOptions cdopts;
  cdopts.max_sweeps = opts.cd_sweeps;
  cdopts.ftol = opts.tol;
  cdopts.initial_step = 0.1 * scale;

  Rng rng(derive_seed(opts.seed, 0x636d696eULL));
  CharMinResult best;
  best.value = std::numeric_limits<double>::infinity();
  best.lambda0 = Eigen::VectorXd::Zero(n);

  for (int s = 0; s < opts.starts; ++s) {
    Eigen::VectorXd lam0(n);
    if (s == 0) {
      lam0 = psi_x;  // exact for zero-horizon limits, close for mild ones
    } else {
      for (int i = 0; i < n; ++i) {
        lam0[i] = rng.uniform(-opts.box_halfwidth, opts.box_halfwidth) * scale;
      }
    }
    if (!std::isfinite(objective(lam0))) continue;  // skip candidates that explode

    Eigen::VectorXd lam = lam0;
    try {
      lam = powell(objective, lam, popts).x;
    } catch (const Error&) {
      // fall through with the pre-Powell candidate
    }
    OptimizeResult refined;
    try {
      refined = coordinate_descent(objective, lam, cdopts);
    } catch (const Error&) {
      refined.x = lam;
      refined.value = objective(lam);
    }
    if (refined.value < best.value) {
      best.value = refined.value;
      best.lambda0 = refined.x;
    }
  }

  best.evaluations = evals;
  best.failed_candidates = failed;
  if (!std::isfinite(best.value)) {
    throw AllCandidatesFailed("every lambda0 candidate diverged before reaching tf");
  }
  return best;
}

}  // namespace hjb
