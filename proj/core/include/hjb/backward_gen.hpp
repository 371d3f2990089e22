#pragma once

#include <cstdint>
#include <vector>

#include "hjb/collocation.hpp"
#include "hjb/ocp.hpp"
#include "hjb/ode.hpp"

namespace hjb {

struct BackwardGenOptions {
  int count = 100;
  double radius = 0.05;
  std::uint64_t seed = 0;
  double rtol = 1e-10;
  double atol = 1e-12;
  /// Trajectory truncated once ||(x, lambda)|| exceeds this multiple of its
  /// terminal value.
  double norm_growth_factor = 1e3;
  /// Fraction of kept trajectories re-solved by TPBVP as a spot check.
  double verify_fraction = 0.05;
  /// A check fails when |V_bwd - V_tpbvp| exceeds this relative error.
  double verify_rel_tol = 1e-3;
  /// DatasetRejected when failing checks exceed this fraction of checks run.
  double reject_fraction = 0.01;
  unsigned workers = 1;
};

struct BackwardGenReport {
  int requested = 0;
  int kept = 0;
  int discarded = 0;
  int truncated = 0;
  int checks_run = 0;
  int checks_failed = 0;
};

struct BackwardGenResult {
  std::vector<Sample> samples;
  /// Kept trajectories, meshes descending from tf.
  std::vector<OdeSolution> trajectories;
  BackwardGenReport report;
};

/// Draws terminal states in a uniform ball around the nominal trajectory's
/// endpoint, closes the terminal condition lambda(tf) = psi_x, w(tf) = psi,
/// and integrates the augmented characteristic system backward to t0.
/// Samples are recorded at integrator mesh points with src = "backward".
/// Throws DatasetRejected when the TPBVP spot check fails too often.
BackwardGenResult generate_backward(const OcpDefinition& ocp,
                                    const BvpSolution& nominal,
                                    const BackwardGenOptions& opts = {});

}  // namespace hjb
