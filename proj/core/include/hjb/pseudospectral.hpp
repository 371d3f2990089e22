#pragma once

#include <Eigen/Core>
#include <utility>

#include "hjb/lgl.hpp"
#include "hjb/ocp.hpp"
#include "hjb/optimize.hpp"

namespace hjb {

/// Direct transcription on an LGL grid. Decision vector layout:
/// [xbar_1 .. xbar_N | ubar_0 .. ubar_N]; xbar_0 is fixed to x0. Objective
/// is the LGL quadrature of the running cost plus the terminal cost;
/// defects are D xbar - (tf - t0)/2 * f at every node.
struct TranscribedNlp {
  OcpDefinition ocp;
  LglGrid grid;
  double t0 = 0.0;
  double tf = 1.0;
  Eigen::VectorXd x0;

  int n() const { return ocp.state_dim; }
  int m() const { return ocp.control_dim; }
  int order() const { return grid.order; }
  Eigen::Index var_count() const;

  /// Node time t_k mapped from [-1, 1].
  double node_time(int k) const;

  Eigen::MatrixXd unpack_states(const Eigen::VectorXd& vars) const;
  Eigen::MatrixXd unpack_controls(const Eigen::VectorXd& vars) const;
  Eigen::VectorXd pack(const Eigen::MatrixXd& x_nodes,
                       const Eigen::MatrixXd& u_nodes) const;

  double objective(const Eigen::VectorXd& vars) const;
  /// Stacked dynamics defects, (N+1) * n entries, node-major.
  Eigen::VectorXd defects(const Eigen::VectorXd& vars) const;
  /// Value and exact gradient of objective + rho * ||defects||^2, assembled
  /// from per-node dual Jacobians of f and L.
  double penalty_value_grad(const Eigen::VectorXd& vars, double rho,
                            Eigen::VectorXd& grad) const;
};

TranscribedNlp transcribe(const OcpDefinition& ocp, double t0, double tf,
                          const Eigen::VectorXd& x0, int order);

struct PsOptions {
  int order = 16;
  /// Maximum admissible defect (feasibility relaxation).
  double eps = 1e-6;
  double penalty0 = 1e3;
  double penalty_factor = 10.0;
  int penalty_stages = 6;
  int inner_max_iters = 2000;
  double inner_gtol = 1e-8;
  /// Quasi-Newton memory; 0 means full (memory = variable count). The penalty
  /// Hessian has (N+1)*n eigenvalues scaled by rho, so a memory smaller than
  /// that stiff subspace makes the inner solver stall far from the optimum.
  int inner_memory = 0;
};

struct PsSolution {
  double value = 0.0;
  Eigen::MatrixXd x_nodes;
  Eigen::MatrixXd u_nodes;
  LglGrid grid;
  double t0 = 0.0;
  double tf = 1.0;
  double max_defect = 0.0;
  int stages_used = 0;

  /// Barycentric Lagrange interpolation of (x, u) at time t; exact at nodes.
  std::pair<Eigen::VectorXd, Eigen::VectorXd> eval(double t) const;
};

/// Quadratic-penalty homotopy over the transcribed NLP, warm-started from
/// the uncontrolled rollout. Stops at the first stage with max defect <= eps;
/// throws InfeasibleAtMaxPenalty otherwise.
PsSolution solve_ps(const OcpDefinition& ocp, double t0,
                    const Eigen::VectorXd& x0, const PsOptions& opts = {});

}  // namespace hjb
