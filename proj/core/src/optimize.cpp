#include "hjb/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <vector>

#include "hjb/errors.hpp"

namespace hjb {

namespace {
constexpr double kGolden = 1.618033988749895;
constexpr double kCGolden = 0.3819660112501051;  // 2 - golden ratio
}  // namespace

Bracket bracket_minimum(const std::function<double(double)>& f, double a,
                        double b) {
  double fa = f(a), fb = f(b);
  if (fb > fa) {
    std::swap(a, b);
    std::swap(fa, fb);
  }
  double c = b + kGolden * (b - a);
  double fc = f(c);
  int guard = 0;
  while (fb >= fc) {
    if (++guard > 200) throw NoConvergence("bracket_minimum: no bracket found");
    const double step = c - b;
    a = b;
    fa = fb;
    b = c;
    fb = fc;
    c = b + kGolden * step;
    fc = f(c);
    if (!std::isfinite(fc))
      throw NonFiniteValue("bracket_minimum: objective not finite", c);
  }
  return {a, b, c, fa, fb, fc};
}

std::pair<double, double> brent_minimize(const std::function<double(double)>& f,
                                         const Bracket& br, double tol,
                                         int max_iters) {
  double a = std::min(br.a, br.c);
  double b = std::max(br.a, br.c);
  double x = br.b, w = br.b, v = br.b;
  double fx = br.fb, fw = br.fb, fv = br.fb;
  double d = 0.0, e = 0.0;
  for (int iter = 0; iter < max_iters; ++iter) {
    const double xm = 0.5 * (a + b);
    const double tol1 = tol * std::abs(x) + 1e-18;
    const double tol2 = 2.0 * tol1;
    if (std::abs(x - xm) <= tol2 - 0.5 * (b - a)) return {x, fx};
    bool golden = true;
    if (std::abs(e) > tol1) {
      // Parabolic fit through (x, w, v).
      const double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::abs(q);
      const double e_prev = e;
      e = d;
      if (std::abs(p) < std::abs(0.5 * q * e_prev) && p > q * (a - x) &&
          p < q * (b - x)) {
        d = p / q;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2)
          d = xm > x ? tol1 : -tol1;
        golden = false;
      }
    }
    if (golden) {
      e = (x >= xm ? a : b) - x;
      d = kCGolden * e;
    }
    const double u = std::abs(d) >= tol1 ? x + d : x + (d > 0 ? tol1 : -tol1);
    const double fu = f(u);
    if (fu <= fx) {
      if (u >= x)
        a = x;
      else
        b = x;
      v = w;
      fv = fw;
      w = x;
      fw = fx;
      x = u;
      fx = fu;
    } else {
      if (u < x)
        a = u;
      else
        b = u;
      if (fu <= fw || w == x) {
        v = w;
        fv = fw;
        w = u;
        fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u;
        fv = fu;
      }
    }
  }
  return {x, fx};
}

namespace {

// Minimize f along x + alpha * dir. Returns (f_min, updates x in place).
double line_minimize(const ObjectiveFn& f, Eigen::VectorXd& x,
                     const Eigen::VectorXd& dir, double f0, double tol,
                     double step0 = 1.0) {
  auto g = [&](double alpha) { return f(x + alpha * dir); };
  Bracket br;
  try {
    br = bracket_minimum(g, 0.0, step0);
  } catch (const Error&) {
    return f0;  // flat or pathological along this direction
  }
  auto [alpha, fmin] = brent_minimize(g, br, tol);
  if (fmin < f0) {
    x += alpha * dir;
    return fmin;
  }
  return f0;
}

}  // namespace

OptimizeResult powell(const ObjectiveFn& f, const Eigen::VectorXd& x0,
                      const PowellOptions& opts) {
  const Eigen::Index n = x0.size();
  Eigen::MatrixXd dirs = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd x = x0;
  double fx = f(x);
  OptimizeResult res;
  for (int iter = 0; iter < opts.max_iters; ++iter) {
    const Eigen::VectorXd x_start = x;
    const double f_start = fx;
    double biggest_drop = 0.0;
    Eigen::Index drop_idx = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double f_before = fx;
      fx = line_minimize(f, x, dirs.col(i), fx, opts.line_tol);
      if (f_before - fx > biggest_drop) {
        biggest_drop = f_before - fx;
        drop_idx = i;
      }
    }
    res.iterations = iter + 1;
    if (2.0 * (f_start - fx) <=
        opts.ftol * (std::abs(f_start) + std::abs(fx)) + 1e-300) {
      res.converged = true;
      break;
    }
    // Extrapolated point along the net sweep direction.
    const Eigen::VectorXd sweep = x - x_start;
    const Eigen::VectorXd x_extra = x + sweep;
    const double f_extra = f(x_extra);
    if (f_extra < f_start) {
      const double t = 2.0 * (f_start - 2.0 * fx + f_extra) *
                           ((f_start - fx - biggest_drop) *
                            (f_start - fx - biggest_drop)) -
                       biggest_drop * (f_start - f_extra) * (f_start - f_extra);
      if (t < 0.0 && sweep.norm() > 0.0) {
        fx = line_minimize(f, x, sweep, fx, opts.line_tol);
        dirs.col(drop_idx) = dirs.col(n - 1);
        dirs.col(n - 1) = sweep.normalized();
      }
    }
  }
  res.x = x;
  res.value = fx;
  return res;
}

OptimizeResult coordinate_descent(const ObjectiveFn& f,
                                  const Eigen::VectorXd& x0,
                                  const CoordinateDescentOptions& opts) {
  const Eigen::Index n = x0.size();
  Eigen::VectorXd x = x0;
  double fx = f(x);
  OptimizeResult res;
  for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    const double f_start = fx;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
      e[i] = 1.0;
      fx = line_minimize(f, x, e, fx, 1e-12, opts.initial_step);
    }
    res.iterations = sweep + 1;
    if (f_start - fx <= opts.ftol * (std::abs(f_start) + 1.0)) {
      res.converged = true;
      break;
    }
  }
  res.x = x;
  res.value = fx;
  return res;
}

void AdamState::step(Eigen::VectorXd& x, const Eigen::VectorXd& grad,
                     const AdamOptions& opts) {
  ++t;
  m = opts.beta1 * m + (1.0 - opts.beta1) * grad;
  v = opts.beta2 * v.array().matrix() +
      (1.0 - opts.beta2) * grad.array().square().matrix();
  const double bc1 = 1.0 - std::pow(opts.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(opts.beta2, static_cast<double>(t));
  x.array() -= opts.step * (m.array() / bc1) /
               ((v.array() / bc2).sqrt() + opts.eps);
}

namespace {

struct WolfeResult {
  double alpha;
  double f;
  Eigen::VectorXd grad;
  bool ok;
};

// Strong-Wolfe line search with zoom (bisection/interpolation on the
// bracketing phase).
WolfeResult wolfe_search(const GradObjectiveFn& fg, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& dir, double f0,
                         const Eigen::VectorXd& g0, const LbfgsOptions& opts) {
  const double d0 = g0.dot(dir);
  WolfeResult out{0.0, f0, g0, false};
  if (d0 >= 0.0) return out;  // not a descent direction

  auto eval = [&](double alpha, double& f, Eigen::VectorXd& g) -> double {
    f = fg(x + alpha * dir, g);
    return g.dot(dir);
  };

  auto zoom = [&](double lo, double f_lo, double d_lo, double hi, double f_hi) {
    Eigen::VectorXd g(x.size());
    for (int i = 0; i < opts.max_line_iters; ++i) {
      // Quadratic interpolation with bisection safeguard.
      double alpha = lo + 0.5 * (hi - lo);
      if (std::abs(d_lo) > 0) {
        const double q = lo - 0.5 * d_lo * (hi - lo) * (hi - lo) /
                                  (f_hi - f_lo - d_lo * (hi - lo));
        if (std::isfinite(q) && q > std::min(lo, hi) && q < std::max(lo, hi))
          alpha = q;
      }
      double f;
      const double d = eval(alpha, f, g);
      if (f > f0 + opts.wolfe_c1 * alpha * d0 || f >= f_lo) {
        hi = alpha;
        f_hi = f;
      } else {
        if (std::abs(d) <= -opts.wolfe_c2 * d0) {
          out = {alpha, f, g, true};
          return;
        }
        if (d * (hi - lo) >= 0.0) {
          hi = lo;
          f_hi = f_lo;
        }
        lo = alpha;
        f_lo = f;
        d_lo = d;
      }
      if (std::abs(hi - lo) < 1e-16 * std::max(1.0, std::abs(lo))) break;
    }
    // Fall back to the best sufficient-decrease point found.
    double f;
    const double alpha = lo;
    if (alpha > 0.0) {
      eval(alpha, f, g);
      if (f < f0) out = {alpha, f, g, true};
    }
  };

  double alpha_prev = 0.0, f_prev = f0, d_prev = d0;
  double alpha = 1.0;
  Eigen::VectorXd g(x.size());
  for (int i = 0; i < opts.max_line_iters; ++i) {
    double f;
    const double d = eval(alpha, f, g);
    if (!std::isfinite(f)) {
      alpha *= 0.5;
      continue;
    }
    if (f > f0 + opts.wolfe_c1 * alpha * d0 || (i > 0 && f >= f_prev)) {
      zoom(alpha_prev, f_prev, d_prev, alpha, f);
      return out;
    }
    if (std::abs(d) <= -opts.wolfe_c2 * d0) return {alpha, f, g, true};
    if (d >= 0.0) {
      zoom(alpha, f, d, alpha_prev, f_prev);
      return out;
    }
    alpha_prev = alpha;
    f_prev = f;
    d_prev = d;
    alpha *= 2.0;
  }
  return out;
}

}  // namespace

OptimizeResult lbfgs(const GradObjectiveFn& fg, const Eigen::VectorXd& x0,
                     const LbfgsOptions& opts) {
  const Eigen::Index n = x0.size();
  Eigen::VectorXd x = x0;
  Eigen::VectorXd g(n);
  double f = fg(x, g);

  OptimizeResult res;
  res.x = x;
  res.value = f;

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  double gamma = 1.0;

  for (int iter = 0; iter < opts.max_iters; ++iter) {
    res.iterations = iter;
    if (g.norm() <= opts.gtol) {
      res.converged = true;
      break;
    }
    // Two-loop recursion.
    Eigen::VectorXd q = g;
    const int k = static_cast<int>(s_hist.size());
    std::vector<double> alpha_coef(k);
    for (int i = k - 1; i >= 0; --i) {
      alpha_coef[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha_coef[i] * y_hist[i];
    }
    q *= gamma;
    for (int i = 0; i < k; ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(q);
      q += (alpha_coef[i] - beta) * s_hist[i];
    }
    Eigen::VectorXd dir = -q;

    WolfeResult ls = wolfe_search(fg, x, dir, f, g, opts);
    if (!ls.ok) {
      // Retry with steepest descent before giving up.
      dir = -g;
      ls = wolfe_search(fg, x, dir, f, g, opts);
      if (!ls.ok) break;
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }

    const Eigen::VectorXd s = ls.alpha * dir;
    const Eigen::VectorXd y = ls.grad - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
      gamma = sy / y.squaredNorm();
      if (static_cast<int>(s_hist.size()) > opts.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }

    const double f_prev = f;
    x += s;
    f = ls.f;
    g = ls.grad;
    if (opts.monitor) opts.monitor(iter + 1, x, f);
    if (f < res.value) {
      res.value = f;
      res.x = x;
    }
    if (opts.ftol > 0.0 &&
        std::abs(f_prev - f) <= opts.ftol * std::max(1.0, std::abs(f_prev))) {
      res.converged = true;
      res.iterations = iter + 1;
      break;
    }
  }
  if (f < res.value) {
    res.value = f;
    res.x = x;
  }
  return res;
}

}  // namespace hjb
