#include "hjb/ode.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hjb {

namespace {

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

std::string blowup_msg(const char* what, double t) {
  std::ostringstream os;
  os << what << " at t = " << t;
  return os.str();
}

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// 4th-order embedded weights.
constexpr double e1 = 5179.0 / 57600, e3 = 7571.0 / 16695, e4 = 393.0 / 640,
                 e5 = -92097.0 / 339200, e6 = 187.0 / 2100, e7 = 1.0 / 40;

}  // namespace

Eigen::VectorXd hermite_eval(const std::vector<double>& mesh,
                             const std::vector<Eigen::VectorXd>& states,
                             const std::vector<Eigen::VectorXd>& derivs,
                             double t) {
  if (mesh.size() < 2) return states.front();
  const bool forward = mesh.back() > mesh.front();
  // Locate the bracketing interval; clamp outside the span.
  std::size_t i = 0;
  if (forward) {
    if (t <= mesh.front()) return states.front();
    if (t >= mesh.back()) return states.back();
    i = static_cast<std::size_t>(
            std::upper_bound(mesh.begin(), mesh.end(), t) - mesh.begin()) -
        1;
  } else {
    if (t >= mesh.front()) return states.front();
    if (t <= mesh.back()) return states.back();
    i = static_cast<std::size_t>(std::upper_bound(mesh.begin(), mesh.end(), t,
                                                  std::greater<double>()) -
                                 mesh.begin()) -
        1;
  }
  const double h = mesh[i + 1] - mesh[i];
  const double s = (t - mesh[i]) / h;
  const double s2 = s * s, s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1;
  const double h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2;
  const double h11 = s3 - s2;
  return h00 * states[i] + h * h10 * derivs[i] + h01 * states[i + 1] +
         h * h11 * derivs[i + 1];
}

Eigen::VectorXd OdeSolution::dense_eval(double t) const {
  return hermite_eval(mesh, states, derivs, t);
}

OdeSolution rk4(const OdeRhs& rhs, double t_start, double t_end,
                const Eigen::VectorXd& x0, int steps) {
  if (steps < 1) throw ConfigError("rk4: steps must be positive");
  OdeSolution sol;
  sol.mesh.reserve(steps + 1);
  sol.states.reserve(steps + 1);
  sol.derivs.reserve(steps + 1);
  const double h = (t_end - t_start) / steps;
  double t = t_start;
  Eigen::VectorXd x = x0;
  Eigen::VectorXd f = rhs(t, x);
  sol.mesh.push_back(t);
  sol.states.push_back(x);
  sol.derivs.push_back(f);
  for (int k = 0; k < steps; ++k) {
    const Eigen::VectorXd k1 = f;
    const Eigen::VectorXd k2 = rhs(t + 0.5 * h, x + 0.5 * h * k1);
    const Eigen::VectorXd k3 = rhs(t + 0.5 * h, x + 0.5 * h * k2);
    const Eigen::VectorXd k4 = rhs(t + h, x + h * k3);
    x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
    t = t_start + (k + 1) * h;
    if (!all_finite(x))
      throw NonFiniteValue(blowup_msg("non-finite state", t), t);
    f = rhs(t, x);
    sol.mesh.push_back(t);
    sol.states.push_back(x);
    sol.derivs.push_back(f);
  }
  return sol;
}

OdeSolution rk45_adaptive(const OdeRhs& rhs, double t_start, double t_end,
                          const Eigen::VectorXd& x0, double rtol, double atol) {
  IntegrateOptions opts;
  opts.rtol = rtol;
  opts.atol = atol;
  return rk45_adaptive(rhs, t_start, t_end, x0, opts);
}

OdeSolution rk45_adaptive(const OdeRhs& rhs, double t_start, double t_end,
                          const Eigen::VectorXd& x0,
                          const IntegrateOptions& opts) {
  const double span = t_end - t_start;
  if (span == 0.0) {
    OdeSolution sol;
    sol.mesh = {t_start};
    sol.states = {x0};
    sol.derivs = {rhs(t_start, x0)};
    return sol;
  }
  // Integrate forward in s; s = -t when the requested span is backward so a
  // single code path handles both directions.
  const double dir = span > 0 ? 1.0 : -1.0;
  const double abs_span = std::abs(span);
  auto to_t = [&](double s) { return t_start + dir * s; };
  auto g = [&](double s, const Eigen::VectorXd& y) -> Eigen::VectorXd {
    return dir * rhs(to_t(s), y);
  };

  const double h_min = 1e-14 * abs_span;
  double h = opts.initial_step_fraction * abs_span;
  double s = 0.0;
  Eigen::VectorXd y = x0;
  Eigen::VectorXd k1 = g(s, y);

  OdeSolution sol;
  sol.mesh.push_back(t_start);
  sol.states.push_back(y);
  sol.derivs.push_back(dir * k1);

  long steps = 0;
  while (s < abs_span) {
    if (++steps > opts.max_steps)
      throw MaxIterations("rk45_adaptive: step budget exhausted");
    h = std::min(h, abs_span - s);
    if (h < h_min)
      throw StepUnderflow(blowup_msg("step size underflow", to_t(s)));

    const Eigen::VectorXd k2 = g(s + c2 * h, y + h * (a21 * k1));
    const Eigen::VectorXd k3 = g(s + c3 * h, y + h * (a31 * k1 + a32 * k2));
    const Eigen::VectorXd k4 =
        g(s + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const Eigen::VectorXd k5 =
        g(s + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Eigen::VectorXd k6 =
        g(s + h,
          y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const Eigen::VectorXd y5 =
        y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Eigen::VectorXd k7 = g(s + h, y5);
    const Eigen::VectorXd y4 =
        y + h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    if (!all_finite(y5))
      throw NonFiniteValue(blowup_msg("non-finite state", to_t(s + h)),
                           to_t(s + h));

    // Weighted RMS error against the mixed tolerance.
    double err = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double sc =
          opts.atol +
          opts.rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
      const double e = (y5[i] - y4[i]) / sc;
      err += e * e;
    }
    err = std::sqrt(err / static_cast<double>(y.size()));

    if (err <= 1.0) {
      s += h;
      y = y5;
      k1 = k7;  // FSAL
      if (y.norm() > opts.max_norm ||
          (opts.stop_when && opts.stop_when(to_t(s), y))) {
        sol.truncated = true;
        return sol;
      }
      sol.mesh.push_back(to_t(s));
      sol.states.push_back(y);
      sol.derivs.push_back(dir * k1);
    }
    const double fac =
        err == 0.0 ? 5.0
                   : std::clamp(0.9 * std::pow(1.0 / err, 0.2), 0.2, 5.0);
    h *= fac;
  }
  return sol;
}

}  // namespace hjb
