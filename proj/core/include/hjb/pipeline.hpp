#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "hjb/marching.hpp"
#include "hjb/mlp.hpp"
#include "hjb/ocp.hpp"
#include "hjb/ode.hpp"
#include "hjb/train.hpp"

namespace hjb {

// Adaptive sampling plan: sizes are cumulative initial-point counts per round.
struct RoundPlan {
  std::vector<int> sizes = {64, 128, 1024, 4096};
  double pool_multiplier = 4.0;
  double steep_fraction = 0.5;
};
// Throws ConfigError unless sizes are positive nondecreasing, the fraction is
// in [0,1], and the multiplier is >= 1.
void validate_plan(const RoundPlan& plan);

struct GenerateReport {
  int requested = 0;
  int converged = 0;          // points that produced samples
  int warm_converged = 0;     // subset solved from the warm start alone
  int fallback_used = 0;      // points rescued by marching
  double convergence_rate = 0.0;
  double mean_solve_seconds = 0.0;  // per converged point
  double total_seconds = 0.0;
};

struct Dataset {
  std::vector<Sample> samples;
  GenerateReport report;
};

struct PointGenOptions {
  MarchSchedule schedule;
  ExtensionKind extension = ExtensionKind::kPiecewise;
  BvpOptions bvp;
  // Keep one interior mesh sample per this many mesh points; 0 keeps only the
  // initial point.
  int interior_stride = 4;
  int workers = 1;
};

// Uniform draws from the sampling domain, seeded per index so the list is
// identical for any worker count.
std::vector<Eigen::VectorXd> draw_points(const OcpDefinition& ocp, int count,
                                         std::uint64_t seed);

// March the given initial states; samples at the initial point and decimated
// interior mesh times. Throws AllSolvesFailed when nothing converges.
Dataset march_dataset(const OcpDefinition& ocp, const std::vector<Eigen::VectorXd>& points,
                      const PointGenOptions& opts = {});

// march_dataset over `count` uniform draws.
Dataset generate_seed(const OcpDefinition& ocp, int count, std::uint64_t seed,
                      const PointGenOptions& opts = {});

// Trajectory guess from a trained model: x by integrating the feedback
// closure u*(t, x, VxNN), lambda = VxNN along it, w = VNN along it.
TrajectoryFn warmstart_guess(const MlpModel& model, const OcpDefinition& ocp, double t0,
                             const Eigen::VectorXd& x0, double rtol = 1e-8,
                             double atol = 1e-10);

struct WarmGenOptions {
  BvpOptions bvp;
  bool fallback_march = false;
  MarchSchedule schedule;  // used only for the fallback
  ExtensionKind extension = ExtensionKind::kPiecewise;
  int interior_stride = 4;
  int workers = 1;
};

// Direct TPBVP solves from warm-start guesses at the given initial states;
// failures are counted, not thrown (optionally rescued by marching).
Dataset generate_warm(const MlpModel& model, const OcpDefinition& ocp,
                      const std::vector<Eigen::VectorXd>& points,
                      const WarmGenOptions& opts = {});

// Draws multiplier*target uniform candidates, ranks by ||VxNN(t0, .)|| and
// returns fraction*target steepest plus a uniform fill from the same pool.
std::vector<Eigen::VectorXd> adaptive_select(const MlpModel& model,
                                             const OcpDefinition& ocp, int target,
                                             double pool_multiplier, double fraction,
                                             std::uint64_t seed);

struct ValidationReport {
  int requested = 0;
  int samples = 0;  // points with converged ground truth
  double rel_l2_v = 0.0;
  double rel_l2_lambda = 0.0;
  double max_abs_v = 0.0;
  double convergence_rate = 0.0;
  double wall_seconds = 0.0;
};

// Fresh uniform points, ground truth by marching (independent of the model),
// relative L2 errors of V and lambda at the initial time.
ValidationReport validate(const MlpModel& model, const OcpDefinition& ocp, int count,
                          std::uint64_t seed, const PointGenOptions& opts = {});

struct AdaptiveOptions {
  RoundPlan plan;
  TrainConfig train;
  PointGenOptions gen;
  std::vector<int> hidden_widths = {64, 64, 64};
  int validation_count = 50;
  bool warm_fallback = true;
  std::uint64_t seed = 0;
};

struct AdaptiveResult {
  MlpModel model;
  std::vector<ValidationReport> rounds;
  std::vector<GenerateReport> generation;
  std::vector<TrainHistory> training;
  std::vector<Sample> data;  // cumulative training set
};

// Seed round by marching, later rounds by steepness-guided warm generation;
// the model carries over between rounds. Validation reuses one fixed
// marched point set so per-round errors are directly comparable.
AdaptiveResult run_adaptive(const OcpDefinition& ocp, const AdaptiveOptions& opts);

struct ClosedLoopResult {
  OdeSolution trajectory;  // state part only
  double realized_cost = 0.0;
};

// Rolls out the network feedback law and accumulates the realized cost by
// quadrature on an augmented state.
ClosedLoopResult closed_loop_sim(const MlpModel& model, const OcpDefinition& ocp,
                                 double t0, const Eigen::VectorXd& x0,
                                 double rtol = 1e-8, double atol = 1e-10);

}  // namespace hjb
