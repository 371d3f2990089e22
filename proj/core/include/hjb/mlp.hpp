#pragma once

#include <Eigen/Core>
#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hjb/ocp.hpp"

namespace hjb {

/// Affine map z = scale .* (p - shift) taking [t0, tf] x X0 to [-1, 1]^{n+1}
/// in the stacked input p = (t, x).
struct AffineNormalizer {
  Eigen::VectorXd shift;
  Eigen::VectorXd scale;

  static AffineNormalizer from_domain(double t0, double tf, const Box& x_box);
  Eigen::VectorXd normalize(double t, const Eigen::VectorXd& x) const;
};

/// Feed-forward tanh network approximating V(t, x); float64, linear output.
struct MlpModel {
  /// Layer widths including input (n+1) and output (1).
  std::vector<int> widths;
  /// weights[l]: widths[l+1] x widths[l]; biases[l]: widths[l+1].
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  AffineNormalizer norm;
  /// Set once the out-of-box input clip has been reported for this model.
  std::shared_ptr<std::atomic<bool>> clip_warned =
      std::make_shared<std::atomic<bool>>(false);

  int input_dim() const { return widths.front(); }
  int state_dim() const { return widths.front() - 1; }
};

/// Fan-in-scaled symmetric-uniform initialization, zero biases.
MlpModel make_mlp(const std::vector<int>& hidden_widths, int state_dim,
                  const AffineNormalizer& norm, std::uint64_t seed);

double mlp_forward(const MlpModel& m, double t, const Eigen::VectorXd& x);

struct InputGradient {
  double value = 0.0;
  double dv_dt = 0.0;
  Eigen::VectorXd dv_dx;
};

/// Exact reverse-mode gradient of the forward pass in (t, x).
InputGradient mlp_input_gradient(const MlpModel& m, double t,
                                 const Eigen::VectorXd& x);

/// Costate-augmented mean loss:
///   (1/N) sum (V_i - VNN_i)^2 + (mu/N) sum ||lambda_i - VxNN_i||^2.
double mlp_loss(const MlpModel& m, const std::vector<Sample>& data, double mu);

/// Loss and exact parameter gradient over data[idx] (all samples when idx is
/// empty). The costate term's parameter derivative is assembled by a
/// forward-tangent pass through the network followed by a combined reverse
/// sweep (forward-over-reverse).
double mlp_loss_grad(const MlpModel& m, const std::vector<Sample>& data,
                     const std::vector<int>& idx, double mu,
                     Eigen::VectorXd& grad);

Eigen::VectorXd param_gradient(const MlpModel& m,
                               const std::vector<Sample>& data, double mu);

Eigen::Index param_count(const MlpModel& m);
Eigen::VectorXd pack_params(const MlpModel& m);
void unpack_params(MlpModel& m, const Eigen::VectorXd& p);

/// JSON schema: {widths, activation, normalization:{shift,scale},
/// layers:[{W,b}]}; doubles round-trip bit-exactly.
std::string mlp_to_json_string(const MlpModel& m);
MlpModel mlp_from_json_string(const std::string& text);
void save_mlp(const MlpModel& m, const std::string& path);
MlpModel load_mlp(const std::string& path);

}  // namespace hjb
