#include "hjb/collocation.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "hjb/errors.hpp"

namespace hjb {

namespace {

using Triplet = Eigen::Triplet<double>;

// Condensed 3-stage Lobatto IIIa interval equation (Hermite-Simpson form):
//   Phi_k = y_{k+1} - y_k - (h/6) (f_k + 4 f_mid + f_{k+1}),
//   y_mid = (y_k + y_{k+1})/2 + (h/8) (f_k - f_{k+1}).
Eigen::VectorXd interval_equation(const BvpSystem& sys, double t_k, double h,
                                  const Eigen::VectorXd& y_k,
                                  const Eigen::VectorXd& y_k1,
                                  const Eigen::VectorXd& f_k,
                                  const Eigen::VectorXd& f_k1) {
  const Eigen::VectorXd y_mid =
      0.5 * (y_k + y_k1) + (h / 8.0) * (f_k - f_k1);
  const Eigen::VectorXd f_mid = sys.rhs(t_k + 0.5 * h, y_mid);
  return y_k1 - y_k - (h / 6.0) * (f_k + 4.0 * f_mid + f_k1);
}

struct ResidualEval {
  Eigen::VectorXd F;
  std::vector<Eigen::VectorXd> f;  // rhs at mesh points
  double scale = 1.0;
};

// Residual layout: rows [0, d) boundary, rows [d(k+1), d(k+2)) interval k.
ResidualEval assemble_residual(const BvpSystem& sys,
                               const std::vector<double>& mesh,
                               const std::vector<Eigen::VectorXd>& y) {
  const int d = sys.dim;
  const std::size_t np = mesh.size();
  ResidualEval out;
  out.f.resize(np);
  for (std::size_t k = 0; k < np; ++k) out.f[k] = sys.rhs(mesh[k], y[k]);
  out.F.resize(static_cast<Eigen::Index>(d * np));
  out.F.head(d) = sys.boundary(y.front(), y.back());
  for (std::size_t k = 0; k + 1 < np; ++k) {
    const double h = mesh[k + 1] - mesh[k];
    out.F.segment(static_cast<Eigen::Index>(d * (k + 1)), d) =
        interval_equation(sys, mesh[k], h, y[k], y[k + 1], out.f[k],
                          out.f[k + 1]);
  }
  double ymax = 0.0;
  for (const auto& yk : y) ymax = std::max(ymax, yk.lpNorm<Eigen::Infinity>());
  out.scale = 1.0 + ymax;
  return out;
}

double scaled_norm(const ResidualEval& r) {
  return r.F.lpNorm<Eigen::Infinity>() / r.scale;
}

// Finite-difference Jacobian exploiting the block-bidiagonal structure:
// interval k couples only y_k and y_{k+1}; boundary couples y_0 and y_last.
Eigen::SparseMatrix<double> assemble_jacobian(
    const BvpSystem& sys, const std::vector<double>& mesh,
    const std::vector<Eigen::VectorXd>& y, const ResidualEval& base) {
  const int d = sys.dim;
  const std::size_t np = mesh.size();
  const Eigen::Index ntot = static_cast<Eigen::Index>(d * np);
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(d) * d * (4 * np));

  const Eigen::VectorXd b0 = base.F.head(d);
  for (std::size_t k = 0; k < np; ++k) {
    for (int c = 0; c < d; ++c) {
      const double eps =
          1e-7 * std::max(1.0, std::abs(y[k][c]));
      Eigen::VectorXd yk = y[k];
      yk[c] += eps;
      const Eigen::VectorXd fk = sys.rhs(mesh[k], yk);
      const Eigen::Index col = static_cast<Eigen::Index>(d * k + c);

      if (k == 0 || k + 1 == np) {
        const Eigen::VectorXd bb = k == 0 ? sys.boundary(yk, y.back())
                                          : sys.boundary(y.front(), yk);
        const Eigen::VectorXd db = (bb - b0) / eps;
        for (int r = 0; r < d; ++r)
          if (db[r] != 0.0) trips.emplace_back(r, col, db[r]);
      }
      // Interval k-1 (rows d*k) and interval k (rows d*(k+1)).
      if (k > 0) {
        const double h = mesh[k] - mesh[k - 1];
        const Eigen::VectorXd phi = interval_equation(
            sys, mesh[k - 1], h, y[k - 1], yk, base.f[k - 1], fk);
        const Eigen::VectorXd dphi =
            (phi - base.F.segment(static_cast<Eigen::Index>(d * k), d)) / eps;
        for (int r = 0; r < d; ++r)
          if (dphi[r] != 0.0)
            trips.emplace_back(static_cast<Eigen::Index>(d * k) + r, col,
                               dphi[r]);
      }
      if (k + 1 < np) {
        const double h = mesh[k + 1] - mesh[k];
        const Eigen::VectorXd phi = interval_equation(
            sys, mesh[k], h, yk, y[k + 1], fk, base.f[k + 1]);
        const Eigen::VectorXd dphi =
            (phi -
             base.F.segment(static_cast<Eigen::Index>(d * (k + 1)), d)) /
            eps;
        for (int r = 0; r < d; ++r)
          if (dphi[r] != 0.0)
            trips.emplace_back(static_cast<Eigen::Index>(d * (k + 1)) + r, col,
                               dphi[r]);
      }
    }
  }
  Eigen::SparseMatrix<double> jac(ntot, ntot);
  jac.setFromTriplets(trips.begin(), trips.end());
  return jac;
}

// Interval-scaled defect of the cubic interpolant at off-collocation points
// tau = 1/4, 3/4: h * ||S'(t) - rhs(t, S(t))||_inf / (1 + ||y||_inf).
std::vector<double> interval_defects(const BvpSystem& sys,
                                     const std::vector<double>& mesh,
                                     const std::vector<Eigen::VectorXd>& y,
                                     const std::vector<Eigen::VectorXd>& f) {
  const std::size_t ni = mesh.size() - 1;
  std::vector<double> defects(ni, 0.0);
  for (std::size_t k = 0; k < ni; ++k) {
    const double h = mesh[k + 1] - mesh[k];
    const double scale =
        1.0 + std::max(y[k].lpNorm<Eigen::Infinity>(),
                       y[k + 1].lpNorm<Eigen::Infinity>());
    for (const double s : {0.25, 0.75}) {
      const double s2 = s * s, s3 = s2 * s;
      // Hermite basis values and derivatives at s.
      const Eigen::VectorXd S = (2 * s3 - 3 * s2 + 1) * y[k] +
                                h * (s3 - 2 * s2 + s) * f[k] +
                                (-2 * s3 + 3 * s2) * y[k + 1] +
                                h * (s3 - s2) * f[k + 1];
      const Eigen::VectorXd Sp = ((6 * s2 - 6 * s) * y[k] +
                                  h * (3 * s2 - 4 * s + 1) * f[k] +
                                  (-6 * s2 + 6 * s) * y[k + 1] +
                                  h * (3 * s2 - 2 * s) * f[k + 1]) /
                                 h;
      const Eigen::VectorXd defect = Sp - sys.rhs(mesh[k] + s * h, S);
      defects[k] = std::max(defects[k],
                            h * defect.lpNorm<Eigen::Infinity>() / scale);
    }
  }
  return defects;
}

// Newton iteration on a fixed mesh. Returns the final scaled residual.
double newton_on_mesh(const BvpSystem& sys, const std::vector<double>& mesh,
                      std::vector<Eigen::VectorXd>& y, const BvpOptions& opts,
                      int& iterations_used) {
  const int d = sys.dim;
  const std::size_t np = mesh.size();
  ResidualEval res = assemble_residual(sys, mesh, y);
  double rnorm = scaled_norm(res);
  for (int it = 0; it < opts.max_newton_per_mesh; ++it) {
    if (!res.F.allFinite())
      throw NonFiniteValue("collocation residual not finite");
    if (rnorm <= opts.tol) return rnorm;
    const Eigen::SparseMatrix<double> jac =
        assemble_jacobian(sys, mesh, y, res);
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(jac);
    if (lu.info() != Eigen::Success)
      throw SingularJacobian("collocation Jacobian factorization failed");
    const Eigen::VectorXd delta = lu.solve(-res.F);
    if (!delta.allFinite())
      throw SingularJacobian("collocation Newton step not finite");

    // Damped step: full Newton, then halving until the residual drops.
    double alpha = 1.0;
    bool accepted = false;
    for (int half = 0; half <= opts.max_halvings; ++half) {
      std::vector<Eigen::VectorXd> y_trial(np);
      for (std::size_t k = 0; k < np; ++k)
        y_trial[k] =
            y[k] + alpha * delta.segment(static_cast<Eigen::Index>(d * k), d);
      ResidualEval res_trial = assemble_residual(sys, mesh, y_trial);
      const double rtrial = scaled_norm(res_trial);
      if (std::isfinite(rtrial) && rtrial < rnorm) {
        y = std::move(y_trial);
        res = std::move(res_trial);
        rnorm = rtrial;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    ++iterations_used;
    if (!accepted)
      throw MaxIterations("collocation Newton stalled at residual " +
                          std::to_string(rnorm));
  }
  if (rnorm > opts.tol)
    throw MaxIterations("collocation Newton exceeded iteration budget");
  return rnorm;
}

}  // namespace

TrajectoryFn BvpSolution::interpolant() const {
  // Copies keep the interpolant valid past the solution's lifetime.
  auto m = mesh;
  auto yy = y;
  auto ff = f;
  return [m = std::move(m), yy = std::move(yy),
          ff = std::move(ff)](double t) -> Eigen::VectorXd {
    return hermite_eval(m, yy, ff, t);
  };
}

double collocation_residual(const BvpSystem& sys,
                            const std::vector<double>& mesh,
                            const std::vector<Eigen::VectorXd>& y) {
  return scaled_norm(assemble_residual(sys, mesh, y));
}

BvpSolution solve_bvp(const BvpSystem& sys, double a, double b,
                      const TrajectoryFn& guess, const BvpOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  if (!(b > a)) throw ConfigError("solve_bvp: interval must have b > a");

  std::vector<double> mesh;
  if (opts.initial_mesh.empty()) {
    mesh.resize(opts.initial_intervals + 1);
    for (int k = 0; k <= opts.initial_intervals; ++k)
      mesh[k] = a + (b - a) * k / opts.initial_intervals;
  } else {
    mesh = opts.initial_mesh;
    if (mesh.size() < 2 || !std::is_sorted(mesh.begin(), mesh.end()) ||
        std::abs(mesh.front() - a) > 1e-12 * (1.0 + std::abs(a)) ||
        std::abs(mesh.back() - b) > 1e-12 * (1.0 + std::abs(b)))
      throw ConfigError("solve_bvp: initial_mesh must span [a, b] ascending");
    mesh.front() = a;
    mesh.back() = b;
  }
  std::vector<Eigen::VectorXd> y(mesh.size());
  for (std::size_t k = 0; k < mesh.size(); ++k) y[k] = guess(mesh[k]);

  BvpSolution sol;
  int newton_total = 0;
  while (true) {
    const double rnorm = newton_on_mesh(sys, mesh, y, opts, newton_total);

    std::vector<Eigen::VectorXd> f(mesh.size());
    for (std::size_t k = 0; k < mesh.size(); ++k) f[k] = sys.rhs(mesh[k], y[k]);
    const std::vector<double> defects = interval_defects(sys, mesh, y, f);
    const double worst = *std::max_element(defects.begin(), defects.end());
    if (worst <= opts.defect_tol) {
      sol.mesh = std::move(mesh);
      sol.y = std::move(y);
      sol.f = std::move(f);
      sol.report.converged = true;
      sol.report.newton_iterations = newton_total;
      sol.report.final_residual = rnorm;
      sol.report.mesh_points = static_cast<int>(sol.mesh.size());
      sol.report.wall_time =
          std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                        start)
              .count();
      return sol;
    }

    // Bisect the worst 20% of intervals with defects above tolerance.
    std::vector<std::size_t> order(defects.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
      return defects[i] > defects[j];
    });
    const std::size_t budget =
        std::max<std::size_t>(1, defects.size() / 5);
    std::vector<bool> split(defects.size(), false);
    std::size_t nsplit = 0;
    for (std::size_t idx : order) {
      if (nsplit >= budget || defects[idx] <= opts.defect_tol) break;
      split[idx] = true;
      ++nsplit;
    }
    if (mesh.size() + nsplit > static_cast<std::size_t>(opts.max_mesh_points))
      throw MeshLimitExceeded("collocation mesh would exceed " +
                              std::to_string(opts.max_mesh_points) +
                              " points");

    std::vector<double> new_mesh;
    std::vector<Eigen::VectorXd> new_y;
    new_mesh.reserve(mesh.size() + nsplit);
    new_y.reserve(mesh.size() + nsplit);
    for (std::size_t k = 0; k + 1 < mesh.size(); ++k) {
      new_mesh.push_back(mesh[k]);
      new_y.push_back(y[k]);
      if (split[k]) {
        const double tm = 0.5 * (mesh[k] + mesh[k + 1]);
        new_mesh.push_back(tm);
        new_y.push_back(hermite_eval(mesh, y, f, tm));
      }
    }
    new_mesh.push_back(mesh.back());
    new_y.push_back(y.back());
    mesh = std::move(new_mesh);
    y = std::move(new_y);
  }
}

BvpSystem characteristic_system(const OcpDefinition& ocp, double /*t0*/,
                                const Eigen::VectorXd& x0) {
  const int n = ocp.state_dim;
  if (x0.size() != n)
    throw ConfigError("characteristic_system: x0 has dimension " +
                      std::to_string(x0.size()) + ", expected " +
                      std::to_string(n));
  BvpSystem sys;
  sys.dim = 2 * n + 1;
  sys.rhs = [ocp, n](double t, const Eigen::VectorXd& yv) -> Eigen::VectorXd {
    const Eigen::VectorXd x = yv.head(n);
    const Eigen::VectorXd lam = yv.segment(n, n);
    const Eigen::VectorXd u = ocp.optimal_control(t, x, lam);
    Eigen::VectorXd dy(2 * n + 1);
    dy.head(n) = ocp.dynamics(t, x, u);
    dy.segment(n, n) = ocp.costate_rhs(t, x, lam);
    dy[2 * n] = -ocp.running_cost(t, x, u);
    return dy;
  };
  sys.boundary = [ocp, n, x0](const Eigen::VectorXd& ya,
                              const Eigen::VectorXd& yb) -> Eigen::VectorXd {
    Eigen::VectorXd r(2 * n + 1);
    const Eigen::VectorXd xb = yb.head(n);
    r.head(n) = ya.head(n) - x0;
    r.segment(n, n) = yb.segment(n, n) - ocp.terminal_cost_gradient(xb);
    r[2 * n] = yb[2 * n] - ocp.terminal_cost(xb);
    return r;
  };
  return sys;
}

TrajectoryFn constant_guess(const OcpDefinition& ocp,
                            const Eigen::VectorXd& x0) {
  const int n = ocp.state_dim;
  Eigen::VectorXd y0(2 * n + 1);
  y0.head(n) = x0;
  y0.segment(n, n) = ocp.terminal_cost_gradient(x0);
  y0[2 * n] = ocp.terminal_cost(x0);
  return [y0](double) { return y0; };
}

BvpSolution solve_tpbvp(const OcpDefinition& ocp, double t0,
                        const Eigen::VectorXd& x0, const TrajectoryFn& guess,
                        double tol) {
  BvpOptions opts;
  opts.tol = tol;
  return solve_tpbvp(ocp, t0, x0, guess, opts);
}

BvpSolution solve_tpbvp(const OcpDefinition& ocp, double t0,
                        const Eigen::VectorXd& x0, const TrajectoryFn& guess,
                        const BvpOptions& opts) {
  const BvpSystem sys = characteristic_system(ocp, t0, x0);
  return solve_bvp(sys, t0, ocp.tf, guess, opts);
}

}  // namespace hjb
