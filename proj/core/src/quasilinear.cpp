#include "hjb/quasilinear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "hjb/errors.hpp"
#include "hjb/ode.hpp"
#include "hjb/rng.hpp"

namespace hjb {
namespace {

struct Root {
  Eigen::VectorXd r;
  double s = 0.0;
  double u = 0.0;
};

// Characteristic (x(s), u(s)) from surface parameter r, as one ODE state.
OdeSolution trace(const QuasilinearPde& pde, const InitialSurface& surface,
                  const Eigen::VectorXd& r, double s, const QuasilinearOptions& opts) {
  const int n = pde.dim;
  Eigen::VectorXd y0(n + 1);
  y0.head(n) = surface.point(r);
  y0[n] = surface.data(r);

  OdeRhs rhs = [&pde, n](double, const Eigen::VectorXd& y) {
    Eigen::VectorXd dy(n + 1);
    dy.head(n) = pde.a(y.head(n), y[n]);
    dy[n] = pde.c(y.head(n), y[n]);
    return dy;
  };

  if (std::abs(s) < 1e-300) {
    OdeSolution sol;
    sol.mesh = {0.0};
    sol.states = {y0};
    sol.derivs = {rhs(0.0, y0)};
    return sol;
  }
  IntegrateOptions iopts;
  iopts.rtol = opts.rtol;
  iopts.atol = opts.atol;
  iopts.max_norm = 1e8 * std::max(1.0, y0.norm());
  return rk45_adaptive(rhs, 0.0, s, y0, iopts);
}

// Hit-map residual x(s; r) - x_target; empty on integrator failure.
std::optional<Eigen::VectorXd> hit_residual(const QuasilinearPde& pde,
                                            const InitialSurface& surface,
                                            const Eigen::VectorXd& z,
                                            const Eigen::VectorXd& x_target,
                                            const QuasilinearOptions& opts) {
  const int n = pde.dim;
  const Eigen::VectorXd r = z.head(n - 1);
  const double s = z[n - 1];
  try {
    const OdeSolution sol = trace(pde, surface, r, s, opts);
    if (sol.truncated) return std::nullopt;
    Eigen::VectorXd res = sol.states.back().head(n) - x_target;
    if (!res.allFinite()) return std::nullopt;
    return res;
  } catch (const Error&) {
    return std::nullopt;
  }
}

// Damped Newton on the square hit map over z = (r, s).
std::optional<Root> newton_hit(const QuasilinearPde& pde, const InitialSurface& surface,
                               Eigen::VectorXd z, const Eigen::VectorXd& x_target,
                               const QuasilinearOptions& opts) {
  const int n = pde.dim;
  const double target_tol = opts.tol * (1.0 + x_target.norm());

  auto res0 = hit_residual(pde, surface, z, x_target, opts);
  if (!res0) return std::nullopt;
  double rnorm = res0->norm();

  for (int it = 0; it < opts.max_newton; ++it) {
    if (rnorm <= target_tol) break;
    Eigen::MatrixXd jac(n, n);
    for (int j = 0; j < n; ++j) {
      const double eps = 1e-7 * std::max(1.0, std::abs(z[j]));
      Eigen::VectorXd zp = z;
      zp[j] += eps;
      auto resp = hit_residual(pde, surface, zp, x_target, opts);
      if (!resp) return std::nullopt;
      jac.col(j) = (*resp - *res0) / eps;
    }
    const Eigen::VectorXd step = jac.fullPivLu().solve(-*res0);
    if (!step.allFinite()) return std::nullopt;

    double alpha = 1.0;
    bool accepted = false;
    for (int h = 0; h < 8; ++h) {
      const Eigen::VectorXd zt = z + alpha * step;
      auto rest = hit_residual(pde, surface, zt, x_target, opts);
      if (rest && rest->norm() < rnorm) {
        z = zt;
        res0 = rest;
        rnorm = rest->norm();
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) return std::nullopt;
  }
  if (rnorm > target_tol) return std::nullopt;

  const OdeSolution sol = trace(pde, surface, z.head(n - 1), z[n - 1], opts);
  Root root;
  root.r = z.head(n - 1);
  root.s = z[n - 1];
  root.u = sol.states.back()[n];
  return root;
}

// The characteristic-map Jacobian at arc s' is M(s') = [dx/dr | a]; a fold
// (crossing characteristics) makes it singular somewhere along the arc.
// Sampled check: condition blow-up or a determinant sign change.
void check_crossing(const QuasilinearPde& pde, const InitialSurface& surface,
                    const Root& root, const QuasilinearOptions& opts) {
  const int n = pde.dim;
  const int np = n - 1;

  const OdeSolution base = trace(pde, surface, root.r, root.s, opts);
  std::vector<OdeSolution> pert;
  std::vector<double> eps(np);
  pert.reserve(np);
  for (int j = 0; j < np; ++j) {
    eps[j] = 1e-6 * (1.0 + std::abs(root.r[j]));
    Eigen::VectorXd rp = root.r;
    rp[j] += eps[j];
    pert.push_back(trace(pde, surface, rp, root.s, opts));
  }

  const int samples = std::max(2, opts.crossing_samples);
  double prev_det = 0.0;
  for (int k = 0; k < samples; ++k) {
    const double s = root.s * static_cast<double>(k) / (samples - 1);
    const Eigen::VectorXd yb = base.dense_eval(s);
    Eigen::MatrixXd m(n, n);
    for (int j = 0; j < np; ++j) {
      m.col(j) = (pert[j].dense_eval(s).head(n) - yb.head(n)) / eps[j];
    }
    m.col(n - 1) = pde.a(yb.head(n), yb[n]);

    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(n - 1);
    if (smin <= 0.0 || smax / smin > opts.cond_limit) {
      throw ShockDetected("characteristic-map Jacobian singular along the arc");
    }
    const double det = m.determinant();
    if (k > 0 && det * prev_det < 0.0) {
      throw ShockDetected("characteristics cross along the arc (fold)");
    }
    prev_det = det;
  }
}

}  // namespace

double quasilinear_eval(const QuasilinearPde& pde, const InitialSurface& surface,
                        const Eigen::VectorXd& x_target, const QuasilinearOptions& opts) {
  const int n = pde.dim;
  if (surface.param_dim != n - 1) {
    throw ConfigError("initial surface must have dimension pde.dim - 1");
  }

  Rng rng(derive_seed(opts.seed, 0x716c696eULL));
  std::vector<Root> roots;

  const int starts = std::max(1, opts.starts);
  for (int sidx = 0; sidx < starts; ++sidx) {
    Eigen::VectorXd r0(n - 1);
    if (sidx == 0) {
      r0.setZero();
    } else {
      for (int i = 0; i < n - 1; ++i) {
        r0[i] = rng.uniform(-opts.param_radius, opts.param_radius);
      }
    }
    const Eigen::VectorXd p0 = surface.point(r0);
    const Eigen::VectorXd a0 = pde.a(p0, surface.data(r0));
    double s0 = (x_target - p0).norm() / std::max(a0.norm(), 1e-6);
    s0 = std::max(s0, 1e-3);
    if (sidx % 2 == 1) s0 = -s0;  // probe both sides of the surface
    if (sidx > 1) s0 *= rng.uniform(0.5, 1.5);

    Eigen::VectorXd z(n);
    z.head(n - 1) = r0;
    z[n - 1] = s0;
    if (auto root = newton_hit(pde, surface, z, x_target, opts)) {
      roots.push_back(*root);
    }
  }

  if (roots.empty()) {
    throw NoCharacteristicFound("no characteristic reaches the target point");
  }
  for (std::size_t i = 0; i < roots.size(); ++i) {
    for (std::size_t j = i + 1; j < roots.size(); ++j) {
      if (std::abs(roots[i].u - roots[j].u) > opts.shock_u_tol) {
        throw ShockDetected("distinct characteristics carry different data at the target");
      }
    }
  }

  const Root& best = *std::min_element(
      roots.begin(), roots.end(),
      [](const Root& a, const Root& b) { return std::abs(a.s) < std::abs(b.s); });
  check_crossing(pde, surface, best, opts);
  return best.u;
}

}  // namespace hjb
