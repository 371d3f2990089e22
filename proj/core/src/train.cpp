#include "hjb/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hjb/errors.hpp"
#include "hjb/optimize.hpp"
#include "hjb/rng.hpp"

namespace hjb {

std::pair<MlpModel, TrainHistory> train(const MlpModel& init,
                                        const std::vector<Sample>& data,
                                        const TrainConfig& cfg) {
  if (data.empty()) throw EmptyDataset("train: no samples");
  if (cfg.mu < 0.0) throw ConfigError("train: mu must be >= 0");

  MlpModel model = init;
  TrainHistory hist;

  Eigen::VectorXd best_params = pack_params(model);
  double best_loss = mlp_loss(model, data, cfg.mu);
  hist.initial_loss = best_loss;
  hist.loss.push_back(best_loss);

  // Stage 1: seeded minibatch Adam.
  const int nd = static_cast<int>(data.size());
  const int batch =
      cfg.batch_size <= 0 ? nd : std::min(cfg.batch_size, nd);
  Eigen::VectorXd params = pack_params(model);
  AdamState adam;
  adam.init(params.size());
  AdamOptions aopts;
  aopts.step = cfg.adam_step;

  Rng rng(derive_seed(cfg.seed, 0x7261696eULL));
  std::vector<int> order(static_cast<std::size_t>(nd));
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();  // forces an initial shuffle

  Eigen::VectorXd grad;
  std::vector<int> mini(static_cast<std::size_t>(batch));
  for (int it = 0; it < cfg.adam_iters; ++it) {
    if (batch == nd) {
      mini.clear();
    } else {
      for (int k = 0; k < batch; ++k) {
        if (cursor == order.size()) {
          rng.shuffle(order);
          cursor = 0;
        }
        mini[static_cast<std::size_t>(k)] = order[cursor++];
      }
    }
    unpack_params(model, params);
    const double l = mlp_loss_grad(model, data, mini, cfg.mu, grad);
    if (!std::isfinite(l))
      throw NonFiniteValue("training loss diverged at warmup iteration " +
                               std::to_string(it),
                           static_cast<double>(it));
    adam.step(params, grad, aopts);
    ++hist.adam_iterations;
  }
  unpack_params(model, params);
  {
    const double l = mlp_loss(model, data, cfg.mu);
    hist.loss.push_back(l);
    if (l < best_loss) {
      best_loss = l;
      best_params = params;
    }
  }

  // Stage 2: full-batch L-BFGS from the warmup point.
  LbfgsOptions lopts;
  lopts.memory = cfg.lbfgs_memory;
  lopts.max_iters = cfg.lbfgs_max_iters;
  lopts.gtol = cfg.lbfgs_gtol;
  lopts.monitor = [&](int, const Eigen::VectorXd&, double f) {
    hist.loss.push_back(f);
    ++hist.lbfgs_iterations;
  };
  auto objective = [&](const Eigen::VectorXd& p,
                       Eigen::VectorXd& g) -> double {
    unpack_params(model, p);
    return mlp_loss_grad(model, data, {}, cfg.mu, g);
  };
  const OptimizeResult qres = lbfgs(objective, params, lopts);
  if (qres.value < best_loss) {
    best_loss = qres.value;
    best_params = qres.x;
  }

  unpack_params(model, best_params);
  hist.final_loss = best_loss;
  return {std::move(model), std::move(hist)};
}

}  // namespace hjb
