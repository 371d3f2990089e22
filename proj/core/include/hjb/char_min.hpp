#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "hjb/ocp.hpp"

namespace hjb {

struct CharMinOptions {
  int starts = 16;            // candidate count, >= 1
  double box_halfwidth = 5.0; // lambda0 box half width, scaled by |psi_x(x0)|
  int powell_iters = 60;
  int cd_sweeps = 6;
  double tol = 1e-10;         // optimizer relative decrease tolerance
  std::uint64_t seed = 0;
  double rtol = 1e-8;
  double atol = 1e-10;
};

struct CharMinResult {
  double value = 0.0;
  Eigen::VectorXd lambda0;
  long long evaluations = 0;   // objective (trajectory) evaluations
  int failed_candidates = 0;   // integrations that diverged or threw
};

// Cost of the characteristic launched from (x0, lambda0) at t0: integrates
// state and costate forward and accumulates running plus terminal cost.
// Divergent integrations return +infinity.
double characteristic_cost(const OcpDefinition& ocp, double t0, const Eigen::VectorXd& x0,
                           const Eigen::VectorXd& lambda0, double rtol = 1e-8,
                           double atol = 1e-10);

// V(t0,x0) as the minimum of characteristic_cost over lambda0, searched by
// Powell plus coordinate-descent refinement from multiple starts.
CharMinResult char_min_value(const OcpDefinition& ocp, double t0, const Eigen::VectorXd& x0,
                             const CharMinOptions& opts = {});

}  // namespace hjb
