#include "hjb/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "hjb/collocation.hpp"
#include "hjb/errors.hpp"
#include "hjb/parallel.hpp"
#include "hjb/rng.hpp"

namespace hjb {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Initial-point sample plus every stride-th interior mesh sample.
void append_trajectory_samples(const BvpSolution& sol, int n, int stride,
                               const char* src, std::vector<Sample>& out) {
  const auto record = [&](std::size_t k) {
    const Eigen::VectorXd& y = sol.y[k];
    Sample s;
    s.t = sol.mesh[k];
    s.x = y.head(n);
    s.v = y[2 * n];
    s.lambda = y.segment(n, n);
    s.src = src;
    out.push_back(std::move(s));
  };
  record(0);
  if (stride <= 0) return;
  for (std::size_t k = static_cast<std::size_t>(stride); k < sol.mesh.size();
       k += static_cast<std::size_t>(stride)) {
    record(k);
  }
}

struct PointOutcome {
  bool converged = false;
  bool warm = false;
  bool fallback = false;
  double seconds = 0.0;
  std::vector<Sample> samples;
};

Dataset merge_outcomes(const std::vector<PointOutcome>& slots, double total_seconds) {
  Dataset ds;
  ds.report.requested = static_cast<int>(slots.size());
  double solve_seconds = 0.0;
  for (const PointOutcome& o : slots) {
    if (!o.converged) continue;
    ++ds.report.converged;
    ds.report.warm_converged += o.warm ? 1 : 0;
    ds.report.fallback_used += o.fallback ? 1 : 0;
    solve_seconds += o.seconds;
    ds.samples.insert(ds.samples.end(), o.samples.begin(), o.samples.end());
  }
  if (ds.report.requested > 0) {
    ds.report.convergence_rate =
        static_cast<double>(ds.report.converged) / ds.report.requested;
  }
  if (ds.report.converged > 0) {
    ds.report.mean_solve_seconds = solve_seconds / ds.report.converged;
  }
  ds.report.total_seconds = total_seconds;
  return ds;
}

}  // namespace

void validate_plan(const RoundPlan& plan) {
  if (plan.sizes.empty()) throw ConfigError("round plan has no sizes");
  int prev = 0;
  for (int s : plan.sizes) {
    if (s <= 0) throw ConfigError("round sizes must be positive");
    if (s < prev) throw ConfigError("round sizes must be nondecreasing");
    prev = s;
  }
  if (plan.steep_fraction < 0.0 || plan.steep_fraction > 1.0) {
    throw ConfigError("steep fraction must lie in [0, 1]");
  }
  if (plan.pool_multiplier < 1.0) throw ConfigError("pool multiplier must be >= 1");
}

std::vector<Eigen::VectorXd> draw_points(const OcpDefinition& ocp, int count,
                                         std::uint64_t seed) {
  std::vector<Eigen::VectorXd> points(static_cast<std::size_t>(std::max(count, 0)));
  for (int i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    points[static_cast<std::size_t>(i)] = ocp.sample_domain.sample(rng);
  }
  return points;
}

Dataset march_dataset(const OcpDefinition& ocp, const std::vector<Eigen::VectorXd>& points,
                      const PointGenOptions& opts) {
  const auto start = Clock::now();
  std::vector<PointOutcome> slots(points.size());
  parallel_for(points.size(), resolve_workers(opts.workers), [&](std::size_t i) {
    PointOutcome& out = slots[i];
    const auto t_start = Clock::now();
    try {
      const BvpSolution sol =
          march(ocp, ocp.t0, points[i], opts.schedule, opts.extension, opts.bvp);
      append_trajectory_samples(sol, ocp.state_dim, opts.interior_stride, "march",
                                out.samples);
      out.converged = true;
    } catch (const Error&) {
      out.converged = false;
    }
    out.seconds = seconds_since(t_start);
  });
  Dataset ds = merge_outcomes(slots, seconds_since(start));
  if (!points.empty() && ds.report.converged == 0) {
    throw AllSolvesFailed("marching failed at every requested point");
  }
  return ds;
}

Dataset generate_seed(const OcpDefinition& ocp, int count, std::uint64_t seed,
                      const PointGenOptions& opts) {
  return march_dataset(ocp, draw_points(ocp, count, seed), opts);
}

TrajectoryFn warmstart_guess(const MlpModel& model, const OcpDefinition& ocp, double t0,
                             const Eigen::VectorXd& x0, double rtol, double atol) {
  const int n = ocp.state_dim;
  OdeRhs feedback = [&model, &ocp](double t, const Eigen::VectorXd& x) {
    const InputGradient g = mlp_input_gradient(model, t, x);
    return ocp.dynamics(t, x, ocp.optimal_control(t, x, g.dv_dx));
  };
  IntegrateOptions iopts;
  iopts.rtol = rtol;
  iopts.atol = atol;
  auto rollout = std::make_shared<OdeSolution>(rk45_adaptive(feedback, t0, ocp.tf, x0, iopts));
  const MlpModel m = model;  // cheap copy; shares the clip-warning flag
  return [rollout, m, n](double t) {
    const Eigen::VectorXd x = rollout->dense_eval(t);
    const InputGradient g = mlp_input_gradient(m, t, x);
    Eigen::VectorXd y(2 * n + 1);
    y.head(n) = x;
    y.segment(n, n) = g.dv_dx;
    y[2 * n] = g.value;
    return y;
  };
}

Dataset generate_warm(const MlpModel& model, const OcpDefinition& ocp,
                      const std::vector<Eigen::VectorXd>& points,
                      const WarmGenOptions& opts) {
  const auto start = Clock::now();
  std::vector<PointOutcome> slots(points.size());
  parallel_for(points.size(), resolve_workers(opts.workers), [&](std::size_t i) {
    PointOutcome& out = slots[i];
    const auto t_start = Clock::now();
    try {
      const TrajectoryFn guess = warmstart_guess(model, ocp, ocp.t0, points[i]);
      const BvpSolution sol = solve_tpbvp(ocp, ocp.t0, points[i], guess, opts.bvp);
      append_trajectory_samples(sol, ocp.state_dim, opts.interior_stride, "warm",
                                out.samples);
      out.converged = true;
      out.warm = true;
    } catch (const Error&) {
      out.converged = false;
    }
    out.seconds = seconds_since(t_start);
    if (!out.converged && opts.fallback_march) {
      try {
        const BvpSolution sol =
            march(ocp, ocp.t0, points[i], opts.schedule, opts.extension, opts.bvp);
        append_trajectory_samples(sol, ocp.state_dim, opts.interior_stride, "march",
                                  out.samples);
        out.converged = true;
        out.fallback = true;
      } catch (const Error&) {
      }
    }
  });
  return merge_outcomes(slots, seconds_since(start));
}

std::vector<Eigen::VectorXd> adaptive_select(const MlpModel& model,
                                             const OcpDefinition& ocp, int target,
                                             double pool_multiplier, double fraction,
                                             std::uint64_t seed) {
  if (target <= 0) return {};
  if (pool_multiplier < 1.0) throw ConfigError("pool multiplier must be >= 1");
  const int pool_size = static_cast<int>(std::ceil(pool_multiplier * target));

  Rng rng(derive_seed(seed, 0x73656c656374ULL));
  std::vector<Eigen::VectorXd> pool(static_cast<std::size_t>(pool_size));
  std::vector<double> steepness(static_cast<std::size_t>(pool_size));
  for (int j = 0; j < pool_size; ++j) {
    pool[static_cast<std::size_t>(j)] = ocp.sample_domain.sample(rng);
    steepness[static_cast<std::size_t>(j)] =
        mlp_input_gradient(model, ocp.t0, pool[static_cast<std::size_t>(j)]).dv_dx.norm();
  }

  std::vector<int> order(static_cast<std::size_t>(pool_size));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return steepness[static_cast<std::size_t>(a)] > steepness[static_cast<std::size_t>(b)];
  });

  const int n_steep = std::min(target, static_cast<int>(std::llround(fraction * target)));
  std::vector<char> taken(static_cast<std::size_t>(pool_size), 0);
  std::vector<Eigen::VectorXd> selected;
  selected.reserve(static_cast<std::size_t>(target));
  for (int k = 0; k < n_steep; ++k) {
    const int j = order[static_cast<std::size_t>(k)];
    taken[static_cast<std::size_t>(j)] = 1;
    selected.push_back(pool[static_cast<std::size_t>(j)]);
  }
  while (static_cast<int>(selected.size()) < target) {
    const int j = rng.uniform_int(0, pool_size - 1);
    if (taken[static_cast<std::size_t>(j)]) continue;
    taken[static_cast<std::size_t>(j)] = 1;
    selected.push_back(pool[static_cast<std::size_t>(j)]);
  }
  return selected;
}

namespace {

// Model-vs-truth errors at the truth samples' own (t, x).
ValidationReport score_model(const MlpModel& model, const std::vector<Sample>& truth) {
  ValidationReport rep;
  rep.samples = static_cast<int>(truth.size());
  double num_v = 0.0, den_v = 0.0, num_l = 0.0, den_l = 0.0;
  for (const Sample& s : truth) {
    const InputGradient g = mlp_input_gradient(model, s.t, s.x);
    num_v += (g.value - s.v) * (g.value - s.v);
    den_v += s.v * s.v;
    num_l += (g.dv_dx - s.lambda).squaredNorm();
    den_l += s.lambda.squaredNorm();
    rep.max_abs_v = std::max(rep.max_abs_v, std::abs(g.value - s.v));
  }
  rep.rel_l2_v = std::sqrt(num_v / std::max(den_v, 1e-300));
  rep.rel_l2_lambda = std::sqrt(num_l / std::max(den_l, 1e-300));
  return rep;
}

// Ground truth at the initial time only (no interior samples): validation
// points stay inside the sampling domain.
std::vector<Sample> marched_truth(const OcpDefinition& ocp,
                                  const std::vector<Eigen::VectorXd>& points,
                                  const PointGenOptions& opts, double* rate_out) {
  PointGenOptions gopts = opts;
  gopts.interior_stride = 0;
  const Dataset ds = march_dataset(ocp, points, gopts);
  if (rate_out) *rate_out = ds.report.convergence_rate;
  return ds.samples;
}

}  // namespace

ValidationReport validate(const MlpModel& model, const OcpDefinition& ocp, int count,
                          std::uint64_t seed, const PointGenOptions& opts) {
  if (count < 1) throw ConfigError("validate requires count >= 1");
  const auto start = Clock::now();
  const auto points = draw_points(ocp, count, derive_seed(seed, 0x76616c6964ULL));
  double rate = 0.0;
  const auto truth = marched_truth(ocp, points, opts, &rate);
  ValidationReport rep = score_model(model, truth);
  rep.requested = count;
  rep.convergence_rate = rate;
  rep.wall_seconds = seconds_since(start);
  return rep;
}

AdaptiveResult run_adaptive(const OcpDefinition& ocp, const AdaptiveOptions& opts) {
  validate_plan(opts.plan);

  AdaptiveResult result;
  const AffineNormalizer norm =
      AffineNormalizer::from_domain(ocp.t0, ocp.tf, ocp.sample_domain);
  result.model = make_mlp(opts.hidden_widths, ocp.state_dim, norm,
                          derive_seed(opts.seed, 0x6e6574ULL));

  // One fixed marched validation set keeps per-round errors comparable.
  const auto val_points =
      draw_points(ocp, opts.validation_count, derive_seed(opts.seed, 0x76616c6964ULL));
  double val_rate = 0.0;
  const auto val_truth = marched_truth(ocp, val_points, opts.gen, &val_rate);

  for (std::size_t r = 0; r < opts.plan.sizes.size(); ++r) {
    const auto round_start = Clock::now();
    const int prev_total = r == 0 ? 0 : opts.plan.sizes[r - 1];
    const int fresh = opts.plan.sizes[r] - prev_total;

    Dataset ds;
    if (r == 0) {
      ds = generate_seed(ocp, fresh, derive_seed(opts.seed, 0x726f756e64ULL + r),
                         opts.gen);
    } else if (fresh > 0) {
      const auto points =
          adaptive_select(result.model, ocp, fresh, opts.plan.pool_multiplier,
                          opts.plan.steep_fraction, derive_seed(opts.seed, 0x706f6f6cULL + r));
      WarmGenOptions wopts;
      wopts.bvp = opts.gen.bvp;
      wopts.fallback_march = opts.warm_fallback;
      wopts.schedule = opts.gen.schedule;
      wopts.extension = opts.gen.extension;
      wopts.interior_stride = opts.gen.interior_stride;
      wopts.workers = opts.gen.workers;
      ds = generate_warm(result.model, ocp, points, wopts);
    }
    result.generation.push_back(ds.report);
    result.data.insert(result.data.end(), ds.samples.begin(), ds.samples.end());

    TrainConfig cfg = opts.train;
    cfg.seed = derive_seed(opts.seed, 0x747261696eULL + r);
    auto [trained, history] = train(result.model, result.data, cfg);
    result.model = std::move(trained);
    result.training.push_back(std::move(history));

    ValidationReport rep = score_model(result.model, val_truth);
    rep.requested = opts.validation_count;
    rep.convergence_rate = val_rate;
    rep.wall_seconds = seconds_since(round_start);
    result.rounds.push_back(rep);
  }
  return result;
}

ClosedLoopResult closed_loop_sim(const MlpModel& model, const OcpDefinition& ocp,
                                 double t0, const Eigen::VectorXd& x0, double rtol,
                                 double atol) {
  const int n = ocp.state_dim;
  if (x0.size() != n)
    throw ConfigError("closed_loop_sim: x0 has dimension " +
                      std::to_string(x0.size()) + ", expected " +
                      std::to_string(n));
  OdeRhs rhs = [&model, &ocp, n](double t, const Eigen::VectorXd& y) {
    const Eigen::VectorXd x = y.head(n);
    const InputGradient g = mlp_input_gradient(model, t, x);
    const Eigen::VectorXd u = ocp.optimal_control(t, x, g.dv_dx);
    Eigen::VectorXd dy(n + 1);
    dy.head(n) = ocp.dynamics(t, x, u);
    dy[n] = ocp.running_cost(t, x, u);
    return dy;
  };
  Eigen::VectorXd y0(n + 1);
  y0.head(n) = x0;
  y0[n] = 0.0;
  IntegrateOptions iopts;
  iopts.rtol = rtol;
  iopts.atol = atol;
  const OdeSolution aug = rk45_adaptive(rhs, t0, ocp.tf, y0, iopts);

  ClosedLoopResult res;
  res.realized_cost = aug.states.back()[n] + ocp.terminal_cost(aug.states.back().head(n));
  res.trajectory.mesh = aug.mesh;
  res.trajectory.truncated = aug.truncated;
  res.trajectory.states.reserve(aug.states.size());
  res.trajectory.derivs.reserve(aug.derivs.size());
  for (std::size_t k = 0; k < aug.states.size(); ++k) {
    res.trajectory.states.push_back(aug.states[k].head(n));
    res.trajectory.derivs.push_back(aug.derivs[k].head(n));
  }
  return res;
}

}  // namespace hjb
