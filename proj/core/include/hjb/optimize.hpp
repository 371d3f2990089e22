#pragma once

#include <Eigen/Core>
#include <functional>

namespace hjb {

using ObjectiveFn = std::function<double(const Eigen::VectorXd&)>;
/// Returns f(x) and fills grad with the gradient.
using GradObjectiveFn =
    std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct OptimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Downhill bracket (a, b, c) with f(b) < min(f(a), f(c)).
struct Bracket {
  double a, b, c;
  double fa, fb, fc;
};

/// Expands from (a, b) by golden-ratio steps until a minimum is bracketed.
Bracket bracket_minimum(const std::function<double(double)>& f, double a,
                        double b);

/// Brent parabolic-interpolation minimization inside a bracket.
/// Returns (x_min, f_min).
std::pair<double, double> brent_minimize(const std::function<double(double)>& f,
                                         const Bracket& br, double tol = 1e-10,
                                         int max_iters = 200);

struct PowellOptions {
  int max_iters = 200;
  double ftol = 1e-10;
  double line_tol = 1e-10;
};

/// Powell direction-set minimization (no derivatives). Directions start as
/// the coordinate axes; the direction of largest decrease is replaced by the
/// extrapolated sweep direction when profitable.
OptimizeResult powell(const ObjectiveFn& f, const Eigen::VectorXd& x0,
                      const PowellOptions& opts = {});

struct CoordinateDescentOptions {
  int max_sweeps = 100;
  double ftol = 1e-12;
  double initial_step = 1.0;
};

/// Cyclic coordinate descent with Brent line minimization per coordinate.
OptimizeResult coordinate_descent(const ObjectiveFn& f,
                                  const Eigen::VectorXd& x0,
                                  const CoordinateDescentOptions& opts = {});

struct LbfgsOptions {
  int memory = 10;
  int max_iters = 500;
  /// Stop when the gradient norm falls below this.
  double gtol = 1e-8;
  /// Stop when |f_k - f_{k+1}| <= ftol * max(1, |f_k|).
  double ftol = 0.0;
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
  int max_line_iters = 30;
  /// Called after each accepted iterate with (iteration, x, f).
  std::function<void(int, const Eigen::VectorXd&, double)> monitor;
};

/// Limited-memory BFGS with a strong-Wolfe zoom line search. Returns the
/// best iterate seen (by objective value), which need not be the last.
OptimizeResult lbfgs(const GradObjectiveFn& f, const Eigen::VectorXd& x0,
                     const LbfgsOptions& opts = {});

struct AdamOptions {
  double step = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One-step Adam state for caller-driven loops (minibatch training).
struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long t = 0;

  void init(Eigen::Index n) {
    m = Eigen::VectorXd::Zero(n);
    v = Eigen::VectorXd::Zero(n);
    t = 0;
  }
  void step(Eigen::VectorXd& x, const Eigen::VectorXd& grad,
            const AdamOptions& opts);
};

}  // namespace hjb
