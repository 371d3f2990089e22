#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "hjb/mlp.hpp"

namespace hjb {

struct TrainConfig {
  /// Costate-loss weight.
  double mu = 1.0;
  /// First-order warmup stage.
  int adam_iters = 2000;
  double adam_step = 1e-3;
  /// Minibatch size for the warmup; <= 0 or >= N means full batch.
  int batch_size = 1024;
  /// Quasi-Newton stage.
  int lbfgs_memory = 10;
  int lbfgs_max_iters = 5000;
  double lbfgs_gtol = 1e-8;
  std::uint64_t seed = 0;
};

struct TrainHistory {
  /// Full-data loss at recorded checkpoints: initial, post-warmup, then per
  /// quasi-Newton iteration.
  std::vector<double> loss;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  int adam_iterations = 0;
  int lbfgs_iterations = 0;
};

/// Two-stage training (seeded minibatch Adam, then L-BFGS on the full
/// batch). Returns the best iterate by full-data loss, so the result never
/// scores worse than the input model. Deterministic given (data, config).
std::pair<MlpModel, TrainHistory> train(const MlpModel& init,
                                        const std::vector<Sample>& data,
                                        const TrainConfig& cfg);

}  // namespace hjb
