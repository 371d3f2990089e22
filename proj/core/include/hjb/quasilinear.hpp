#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>

namespace hjb {

// sum_i a_i(x, u) du/dx_i = c(x, u) over x in R^dim.
struct QuasilinearPde {
  int dim = 0;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)> a;
  std::function<double(const Eigen::VectorXd&, double)> c;
};

// Non-characteristic initial manifold of dimension dim-1 carrying the data:
// r -> (point(r), data(r)).
struct InitialSurface {
  int param_dim = 0;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> point;
  std::function<double(const Eigen::VectorXd&)> data;
};

struct QuasilinearOptions {
  int starts = 8;
  int max_newton = 50;
  double tol = 1e-10;          // hit-map residual tolerance (relative)
  double shock_u_tol = 1e-6;   // distinct roots differing in u beyond this
  double cond_limit = 1e10;    // characteristic-map condition threshold
  double param_radius = 5.0;   // start box for surface parameters
  std::uint64_t seed = 0;
  double rtol = 1e-10;
  double atol = 1e-12;
  int crossing_samples = 128;  // arc samples for the fold check
};

// u(x_target) by shooting characteristics dx/ds = a, du/ds = c from the
// surface and Newton root-finding (r, s) on the hit map x(s; r) = x_target.
double quasilinear_eval(const QuasilinearPde& pde, const InitialSurface& surface,
                        const Eigen::VectorXd& x_target,
                        const QuasilinearOptions& opts = {});

}  // namespace hjb
