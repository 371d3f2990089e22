#include "hjb/pseudospectral.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "hjb/dual.hpp"
#include "hjb/errors.hpp"
#include "hjb/ode.hpp"

namespace hjb {

namespace {

// Barycentric weights via log-magnitude accumulation; stable at high order.
Eigen::VectorXd barycentric_weights(const Eigen::VectorXd& nodes) {
  const Eigen::Index np = nodes.size();
  Eigen::VectorXd logw(np), sign(np);
  for (Eigen::Index j = 0; j < np; ++j) {
    double lw = 0.0, sg = 1.0;
    for (Eigen::Index i = 0; i < np; ++i) {
      if (i == j) continue;
      const double d = nodes[j] - nodes[i];
      lw -= std::log(std::abs(d));
      if (d < 0) sg = -sg;
    }
    logw[j] = lw;
    sign[j] = sg;
  }
  const double lmax = logw.maxCoeff();
  Eigen::VectorXd w(np);
  for (Eigen::Index j = 0; j < np; ++j)
    w[j] = sign[j] * std::exp(logw[j] - lmax);
  return w;
}

Eigen::VectorXd barycentric_eval(const Eigen::VectorXd& nodes,
                                 const Eigen::VectorXd& bw,
                                 const Eigen::MatrixXd& values, double tau) {
  const Eigen::Index np = nodes.size();
  for (Eigen::Index j = 0; j < np; ++j)
    if (tau == nodes[j]) return values.col(j);
  Eigen::VectorXd num = Eigen::VectorXd::Zero(values.rows());
  double den = 0.0;
  for (Eigen::Index j = 0; j < np; ++j) {
    const double c = bw[j] / (tau - nodes[j]);
    num += c * values.col(j);
    den += c;
  }
  return num / den;
}

}  // namespace

Eigen::Index TranscribedNlp::var_count() const {
  return static_cast<Eigen::Index>(order()) * n() +
         static_cast<Eigen::Index>(order() + 1) * m();
}

double TranscribedNlp::node_time(int k) const {
  return t0 + 0.5 * (grid.nodes[k] + 1.0) * (tf - t0);
}

Eigen::MatrixXd TranscribedNlp::unpack_states(
    const Eigen::VectorXd& vars) const {
  Eigen::MatrixXd x(n(), order() + 1);
  x.col(0) = x0;
  for (int k = 1; k <= order(); ++k)
    x.col(k) = vars.segment(static_cast<Eigen::Index>(k - 1) * n(), n());
  return x;
}

Eigen::MatrixXd TranscribedNlp::unpack_controls(
    const Eigen::VectorXd& vars) const {
  const Eigen::Index off = static_cast<Eigen::Index>(order()) * n();
  Eigen::MatrixXd u(m(), order() + 1);
  for (int k = 0; k <= order(); ++k)
    u.col(k) = vars.segment(off + static_cast<Eigen::Index>(k) * m(), m());
  return u;
}

Eigen::VectorXd TranscribedNlp::pack(const Eigen::MatrixXd& x_nodes,
                                     const Eigen::MatrixXd& u_nodes) const {
  Eigen::VectorXd vars(var_count());
  for (int k = 1; k <= order(); ++k)
    vars.segment(static_cast<Eigen::Index>(k - 1) * n(), n()) = x_nodes.col(k);
  const Eigen::Index off = static_cast<Eigen::Index>(order()) * n();
  for (int k = 0; k <= order(); ++k)
    vars.segment(off + static_cast<Eigen::Index>(k) * m(), m()) =
        u_nodes.col(k);
  return vars;
}

double TranscribedNlp::objective(const Eigen::VectorXd& vars) const {
  const Eigen::MatrixXd x = unpack_states(vars);
  const Eigen::MatrixXd u = unpack_controls(vars);
  const double s = 0.5 * (tf - t0);
  double acc = 0.0;
  for (int k = 0; k <= order(); ++k)
    acc += grid.weights[k] * s *
           ocp.running_cost(node_time(k), x.col(k), u.col(k));
  return acc + ocp.terminal_cost(x.col(order()));
}

Eigen::VectorXd TranscribedNlp::defects(const Eigen::VectorXd& vars) const {
  const Eigen::MatrixXd x = unpack_states(vars);
  const Eigen::MatrixXd u = unpack_controls(vars);
  const double s = 0.5 * (tf - t0);
  // Dx: each state row differentiated over nodes.
  const Eigen::MatrixXd dx = x * grid.diff.transpose();
  Eigen::VectorXd out(static_cast<Eigen::Index>(order() + 1) * n());
  for (int k = 0; k <= order(); ++k)
    out.segment(static_cast<Eigen::Index>(k) * n(), n()) =
        dx.col(k) - s * ocp.dynamics(node_time(k), x.col(k), u.col(k));
  return out;
}

double TranscribedNlp::penalty_value_grad(const Eigen::VectorXd& vars,
                                          double rho,
                                          Eigen::VectorXd& grad) const {
  const int nn = n(), mm = m(), N = order();
  const Eigen::MatrixXd x = unpack_states(vars);
  const Eigen::MatrixXd u = unpack_controls(vars);
  const double s = 0.5 * (tf - t0);

  // Per-node values and dual Jacobians of f and L in (x, u).
  Eigen::MatrixXd f_nodes(nn, N + 1);
  std::vector<Eigen::MatrixXd> fx(N + 1), fu(N + 1);
  Eigen::MatrixXd lx(nn, N + 1), lu(mm, N + 1);
  Eigen::VectorXd l_nodes(N + 1);
  for (int k = 0; k <= N; ++k) {
    const double tk = node_time(k);
    fx[k].resize(nn, nn);
    fu[k].resize(nn, mm);
    DualVector xd = to_dual(Eigen::VectorXd(x.col(k)));
    DualVector ud = to_dual(Eigen::VectorXd(u.col(k)));
    for (int j = 0; j < nn; ++j) {
      xd[j].d = 1.0;
      const DualVector fd = ocp.dynamics_dual(tk, xd, ud);
      const Dual ld = ocp.running_cost_dual(tk, xd, ud);
      for (int i = 0; i < nn; ++i) fx[k](i, j) = fd[i].d;
      lx(j, k) = ld.d;
      if (j == 0) {
        for (int i = 0; i < nn; ++i) f_nodes(i, k) = fd[i].v;
        l_nodes[k] = ld.v;
      }
      xd[j].d = 0.0;
    }
    for (int j = 0; j < mm; ++j) {
      ud[j].d = 1.0;
      const DualVector fd = ocp.dynamics_dual(tk, xd, ud);
      const Dual ld = ocp.running_cost_dual(tk, xd, ud);
      for (int i = 0; i < nn; ++i) fu[k](i, j) = fd[i].d;
      lu(j, k) = ld.d;
      ud[j].d = 0.0;
    }
  }

  // Defects F_k = sum_j D_kj x_j - s f_k.
  const Eigen::MatrixXd dx = x * grid.diff.transpose();
  Eigen::MatrixXd defect(nn, N + 1);
  for (int k = 0; k <= N; ++k) defect.col(k) = dx.col(k) - s * f_nodes.col(k);

  double value = ocp.terminal_cost(x.col(N));
  for (int k = 0; k <= N; ++k) value += grid.weights[k] * s * l_nodes[k];
  value += rho * defect.squaredNorm();

  // Gradient. State block j = 1..N; control block j = 0..N.
  grad.setZero(var_count());
  const Eigen::VectorXd psi_x = ocp.terminal_cost_gradient(x.col(N));
  // 2 rho D^T defect accumulated over state rows: for variable x_j, the
  // coupling term is 2 rho sum_k D_kj defect_k.
  const Eigen::MatrixXd coupling = 2.0 * rho * defect * grid.diff;
  for (int j = 1; j <= N; ++j) {
    Eigen::VectorXd gx = grid.weights[j] * s * lx.col(j);
    gx += coupling.col(j);
    gx -= 2.0 * rho * s * fx[j].transpose() * defect.col(j);
    if (j == N) gx += psi_x;
    grad.segment(static_cast<Eigen::Index>(j - 1) * nn, nn) = gx;
  }
  const Eigen::Index off = static_cast<Eigen::Index>(N) * nn;
  for (int j = 0; j <= N; ++j) {
    Eigen::VectorXd gu = grid.weights[j] * s * lu.col(j);
    gu -= 2.0 * rho * s * fu[j].transpose() * defect.col(j);
    grad.segment(off + static_cast<Eigen::Index>(j) * mm, mm) = gu;
  }
  return value;
}

TranscribedNlp transcribe(const OcpDefinition& ocp, double t0, double tf,
                          const Eigen::VectorXd& x0, int order) {
  if (order < 1) throw ConfigError("transcribe: order must be >= 1");
  if (x0.size() != ocp.state_dim)
    throw ConfigError("transcribe: x0 has dimension " +
                      std::to_string(x0.size()) + ", expected " +
                      std::to_string(ocp.state_dim));
  TranscribedNlp nlp;
  nlp.ocp = ocp;
  nlp.grid = lgl_grid(order);
  nlp.t0 = t0;
  nlp.tf = tf;
  nlp.x0 = x0;
  return nlp;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> PsSolution::eval(double t) const {
  const double tau = 2.0 * (t - t0) / (tf - t0) - 1.0;
  const Eigen::VectorXd bw = barycentric_weights(grid.nodes);
  return {barycentric_eval(grid.nodes, bw, x_nodes, tau),
          barycentric_eval(grid.nodes, bw, u_nodes, tau)};
}

PsSolution solve_ps(const OcpDefinition& ocp, double t0,
                    const Eigen::VectorXd& x0, const PsOptions& opts) {
  TranscribedNlp nlp = transcribe(ocp, t0, ocp.tf, x0, opts.order);
  const int N = opts.order;
  const int nn = nlp.n(), mm = nlp.m();

  // Initial iterate: uncontrolled rollout sampled at the nodes, u = 0.
  Eigen::MatrixXd x_init(nn, N + 1);
  const Eigen::VectorXd u_zero = Eigen::VectorXd::Zero(mm);
  try {
    IntegrateOptions iopts;
    iopts.rtol = 1e-8;
    iopts.atol = 1e-10;
    iopts.max_norm = 1e6 * (1.0 + x0.norm());
    const OdeSolution roll = rk45_adaptive(
        [&](double t, const Eigen::VectorXd& xx) {
          return ocp.dynamics(t, xx, u_zero);
        },
        t0, ocp.tf, x0, iopts);
    for (int k = 0; k <= N; ++k)
      x_init.col(k) = roll.truncated ? x0 : roll.dense_eval(nlp.node_time(k));
  } catch (const Error&) {
    for (int k = 0; k <= N; ++k) x_init.col(k) = x0;
  }
  Eigen::VectorXd vars =
      nlp.pack(x_init, Eigen::MatrixXd::Zero(mm, N + 1));

  PsSolution sol;
  sol.grid = nlp.grid;
  sol.t0 = t0;
  sol.tf = ocp.tf;

  // The whole ladder always runs: the objective bias of the quadratic
  // penalty shrinks like 1/rho, so later feasible stages are more accurate.
  // The returned solution is the last stage that met the relaxation.
  bool feasible = false;
  double last_defect = 0.0;
  double rho = opts.penalty0;
  for (int stage = 0; stage < opts.penalty_stages; ++stage) {
    LbfgsOptions lopts;
    lopts.max_iters = opts.inner_max_iters;
    lopts.gtol = opts.inner_gtol;
    lopts.memory = opts.inner_memory > 0 ? opts.inner_memory
                                         : static_cast<int>(nlp.var_count());
    // Trial points outside the model's domain (kinematic singularities and
    // the like) act as an infinite barrier; the line search backtracks.
    auto fg = [&](const Eigen::VectorXd& v, Eigen::VectorXd& g) {
      try {
        return nlp.penalty_value_grad(v, rho, g);
      } catch (const Error&) {
        g.setZero(nlp.var_count());
        return std::numeric_limits<double>::infinity();
      }
    };
    const OptimizeResult res = lbfgs(fg, vars, lopts);
    vars = res.x;
    last_defect = nlp.defects(vars).lpNorm<Eigen::Infinity>();
    if (last_defect <= opts.eps) {
      sol.stages_used = stage + 1;
      sol.x_nodes = nlp.unpack_states(vars);
      sol.u_nodes = nlp.unpack_controls(vars);
      sol.value = nlp.objective(vars);
      sol.max_defect = last_defect;
      feasible = true;
    }
    rho *= opts.penalty_factor;
  }
  if (feasible) return sol;
  throw InfeasibleAtMaxPenalty("solve_ps: defect " + std::to_string(last_defect) +
                               " above eps after penalty homotopy");
}

}  // namespace hjb
