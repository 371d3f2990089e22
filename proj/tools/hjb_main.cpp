// Command-line front end: problem registry, dataset/model persistence,
// worker control, and JSON report emission for the solver toolkit.

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "hjb/backward_gen.hpp"
#include "hjb/char_min.hpp"
#include "hjb/collocation.hpp"
#include "hjb/dataset.hpp"
#include "hjb/errors.hpp"
#include "hjb/hopf.hpp"
#include "hjb/lgl.hpp"
#include "hjb/lqr.hpp"
#include "hjb/marching.hpp"
#include "hjb/mlp.hpp"
#include "hjb/parallel.hpp"
#include "hjb/pipeline.hpp"
#include "hjb/pseudospectral.hpp"
#include "hjb/rigid_body.hpp"
#include "hjb/train.hpp"

namespace {

using hjb::ConfigError;
using ordered_json = nlohmann::ordered_json;

hjb::HopfProblem make_hopf_by_id(const std::string& id, int dim) {
  if (id == "quadratic") return hjb::make_quadratic_hopf(dim);
  throw ConfigError("unknown hopf problem '" + id + "' (available: quadratic)");
}

Eigen::VectorXd parse_vector(const std::string& csv) {
  std::vector<double> vals;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    std::size_t pos = 0;
    try {
      vals.push_back(std::stod(item, &pos));
    } catch (const std::exception&) {
      throw ConfigError("cannot parse '" + item + "' as a number in '" + csv + "'");
    }
    if (item.find_first_not_of(" \t", pos) != std::string::npos)
      throw ConfigError("trailing characters after number in '" + item +
                        "' (vector elements are comma separated)");
  }
  if (vals.empty()) throw ConfigError("empty vector argument");
  return Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

Eigen::VectorXd parse_fixed_vector(const std::string& csv, int n, const std::string& what) {
  const Eigen::VectorXd v = parse_vector(csv);
  if (v.size() != n)
    throw ConfigError(what + " needs " + std::to_string(n) + " comma-separated entries");
  return v;
}

// Problem selection plus the rigid-body constant overrides; empty strings keep
// the defaults from RigidBodyParams.
struct ProblemFlags {
  std::string id = "rigid_body";
  std::string inertia_csv, actuator_csv, momentum_csv, weights_csv;
  double tf = 0.0;  // 0 keeps the problem default
};

void add_problem_flags(CLI::App* sub, ProblemFlags& f) {
  sub->add_option("--problem", f.id, "Problem id (lqr|rigid_body)");
  sub->add_option("--tf", f.tf, "Final-time override (0 keeps the problem default)");
  sub->add_option("--rb-inertia", f.inertia_csv, "Rigid body inertia diagonal J1,J2,J3");
  sub->add_option("--rb-actuator", f.actuator_csv,
                  "Rigid body actuator matrix, nine row-major entries");
  sub->add_option("--rb-momentum", f.momentum_csv, "Rigid body gyrostat momentum h1,h2,h3");
  sub->add_option("--rb-weights", f.weights_csv, "Rigid body cost weights W1,...,W5");
}

hjb::OcpDefinition make_problem(const ProblemFlags& f) {
  if (f.id == "lqr") return hjb::make_lqr_problem(f.tf > 0 ? f.tf : 1.0);
  if (f.id == "rigid_body") {
    hjb::RigidBodyParams p;
    if (!f.inertia_csv.empty())
      p.inertia = parse_fixed_vector(f.inertia_csv, 3, "--rb-inertia").asDiagonal();
    if (!f.actuator_csv.empty()) {
      const Eigen::VectorXd b = parse_fixed_vector(f.actuator_csv, 9, "--rb-actuator");
      p.actuator = Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(b.data());
    }
    if (!f.momentum_csv.empty())
      p.momentum = parse_fixed_vector(f.momentum_csv, 3, "--rb-momentum");
    if (!f.weights_csv.empty()) {
      const Eigen::VectorXd w = parse_fixed_vector(f.weights_csv, 5, "--rb-weights");
      p.w1 = w[0];
      p.w2 = w[1];
      p.w3 = w[2];
      p.w4 = w[3];
      p.w5 = w[4];
    }
    if (f.tf > 0) p.tf = f.tf;
    return hjb::make_rigid_body_problem(p);
  }
  throw ConfigError("unknown problem '" + f.id + "' (available: lqr, rigid_body)");
}

std::vector<int> parse_int_list(const std::string& csv) {
  std::vector<int> vals;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      vals.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw ConfigError("cannot parse '" + item + "' as an integer in '" + csv + "'");
    }
  }
  if (vals.empty()) throw ConfigError("empty integer list argument");
  return vals;
}

void write_json(const std::string& path, const ordered_json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open report file for writing: " + path);
  out << j.dump(2) << '\n';
}

// Shared march/solver flags.
struct MarchFlags {
  double initial_frac = 0.05;
  double growth_factor = 2.0;
  int max_retries = 6;
  std::string times_csv;
  std::string extension = "piecewise";

  hjb::MarchSchedule schedule() const {
    hjb::MarchSchedule s;
    s.initial_frac = initial_frac;
    s.growth_factor = growth_factor;
    s.max_retries = max_retries;
    if (!times_csv.empty()) {
      const Eigen::VectorXd t = parse_vector(times_csv);
      s.times.assign(t.data(), t.data() + t.size());
    }
    return s;
  }
  hjb::ExtensionKind kind() const {
    if (extension == "piecewise") return hjb::ExtensionKind::kPiecewise;
    if (extension == "linear") return hjb::ExtensionKind::kLinear;
    throw ConfigError("unknown extension '" + extension + "' (piecewise|linear)");
  }
};

void add_march_flags(CLI::App* sub, MarchFlags& f) {
  sub->add_option("--march-initial-frac", f.initial_frac,
                  "First horizon as a fraction of tf - t0");
  sub->add_option("--march-factor", f.growth_factor, "Horizon increment growth factor");
  sub->add_option("--march-retries", f.max_retries, "Increment halvings per failure");
  sub->add_option("--march-times", f.times_csv, "Explicit horizon schedule t1,...,tf");
  sub->add_option("--extension", f.extension, "Guess extension: piecewise|linear");
}

// Flat key=value configuration: each key names a long option of the invoked
// subcommand.  The file is expanded into --key=value tokens ahead of parsing,
// so explicit flags win and unknown keys surface as unexpected-option errors
// naming the key.
void add_config_file(CLI::App* sub) {
  static std::string sink;
  sub->add_option("--config", sink,
                  "Flat key=value configuration file (flags win; unknown keys rejected)");
}

std::vector<std::string> config_file_tokens(const std::string& path,
                                            const std::vector<std::string>& args) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  const auto strip = [](const std::string& s) {
    const std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  std::vector<std::string> tokens;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string text = strip(line);
    if (text.empty() || text[0] == '#') continue;
    const std::size_t eq = text.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value, got '" +
                        text + "'");
    const std::string key = strip(text.substr(0, eq));
    if (key.empty()) throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
    const std::string flag = "--" + key;
    const auto given_explicitly = [&flag](const std::string& tok) {
      return tok == flag || tok.rfind(flag + "=", 0) == 0;
    };
    if (std::any_of(args.begin(), args.end(), given_explicitly)) continue;
    tokens.push_back(flag + "=" + strip(text.substr(eq + 1)));
  }
  return tokens;
}

// Splices config-file entries in right after the subcommand words so they bind
// in that subcommand's scope.
std::vector<std::string> with_config_applied(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      break;
    }
  }
  if (path.empty()) return args;
  const std::vector<std::string> extra = config_file_tokens(path, args);
  std::size_t at = 0;
  while (at < args.size() && !args[at].empty() && args[at][0] != '-') ++at;
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(at), extra.begin(), extra.end());
  return args;
}

ordered_json generate_report_json(const hjb::GenerateReport& r, bool timing) {
  ordered_json j;
  j["requested"] = r.requested;
  j["converged"] = r.converged;
  j["warm_converged"] = r.warm_converged;
  j["fallback_used"] = r.fallback_used;
  j["convergence_rate"] = r.convergence_rate;
  if (timing) {
    j["mean_solve_seconds"] = r.mean_solve_seconds;
    j["total_seconds"] = r.total_seconds;
  }
  return j;
}

ordered_json validation_report_json(const hjb::ValidationReport& r, bool timing) {
  ordered_json j;
  j["requested"] = r.requested;
  j["samples"] = r.samples;
  j["rel_l2_v"] = r.rel_l2_v;
  j["rel_l2_lambda"] = r.rel_l2_lambda;
  j["max_abs_v"] = r.max_abs_v;
  j["convergence_rate"] = r.convergence_rate;
  if (timing) j["wall_seconds"] = r.wall_seconds;
  return j;
}

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causality-free value-function toolkit: characteristic TPBVP solvers,\n"
               "neural value-function training, and alternative pointwise methods"};
  app.require_subcommand(1);

  // problems list
  auto* problems = app.add_subcommand("problems", "Problem registry");
  problems->require_subcommand(1);
  auto* plist = problems->add_subcommand("list", "List registered problems");
  plist->callback([] {
    std::cout << "lqr         scalar linear-quadratic problem with analytic value\n"
              << "rigid_body  six-state attitude control with gyrostat dynamics\n";
  });

  // Shared option state (one subcommand runs per invocation).
  ProblemFlags pf;
  std::string out_path, report_path, model_path, data_path, points_path;
  std::uint64_t seed = 0;
  int workers = 0;
  int count = 64;
  bool timing = false;
  MarchFlags march_flags;

  // generate {seed|warm|backward}
  auto* gen = app.add_subcommand("generate", "Dataset generation");
  gen->require_subcommand(1);

  auto* gseed = gen->add_subcommand("seed", "March from uniform initial states");
  int interior_stride = 4;
  add_problem_flags(gseed, pf);
  gseed->add_option("--count", count, "Number of initial states");
  gseed->add_option("--seed", seed, "Random seed");
  gseed->add_option("--workers", workers, "Worker threads (default HJB_WORKERS or 1)");
  gseed->add_option("--out", out_path, "Output dataset (JSONL)")->required();
  gseed->add_option("--report", report_path, "Write a JSON generation report");
  gseed->add_option("--interior-stride", interior_stride,
                    "Interior mesh decimation stride (0 = initial points only)");
  gseed->add_flag("--timing", timing, "Include wall times in reports");
  add_march_flags(gseed, march_flags);
  add_config_file(gseed);
  gseed->callback([&] {
    const hjb::OcpDefinition ocp = make_problem(pf);
    hjb::PointGenOptions opts;
    opts.schedule = march_flags.schedule();
    opts.extension = march_flags.kind();
    opts.interior_stride = interior_stride;
    opts.workers = workers;
    const hjb::Dataset ds = hjb::generate_seed(ocp, count, seed, opts);
    hjb::save_samples_jsonl(out_path, ds.samples);
    std::cout << "seed generation: " << ds.report.converged << "/" << ds.report.requested
              << " points converged, " << ds.samples.size() << " samples -> " << out_path
              << "\n";
    if (!report_path.empty()) {
      write_json(report_path, generate_report_json(ds.report, timing));
    }
  });

  auto* gwarm = gen->add_subcommand("warm", "Direct solves from a model warm start");
  bool fallback = false;
  add_problem_flags(gwarm, pf);
  gwarm->add_option("--model", model_path, "Trained model (JSON)")->required();
  gwarm->add_option("--count", count, "Number of fresh initial states");
  gwarm->add_option("--seed", seed, "Random seed");
  gwarm->add_option("--workers", workers, "Worker threads");
  gwarm->add_option("--out", out_path, "Output dataset (JSONL)")->required();
  gwarm->add_option("--report", report_path, "Write a JSON generation report");
  gwarm->add_option("--interior-stride", interior_stride, "Interior mesh stride");
  gwarm->add_flag("--fallback", fallback, "March points whose warm solve fails");
  gwarm->add_flag("--timing", timing, "Include wall times in reports");
  add_march_flags(gwarm, march_flags);
  add_config_file(gwarm);
  gwarm->callback([&] {
    const hjb::OcpDefinition ocp = make_problem(pf);
    const hjb::MlpModel model = hjb::load_mlp(model_path);
    hjb::WarmGenOptions opts;
    opts.fallback_march = fallback;
    opts.schedule = march_flags.schedule();
    opts.extension = march_flags.kind();
    opts.interior_stride = interior_stride;
    opts.workers = workers;
    const auto points = hjb::draw_points(ocp, count, seed);
    const hjb::Dataset ds = hjb::generate_warm(model, ocp, points, opts);
    hjb::save_samples_jsonl(out_path, ds.samples);
    std::cout << "warm generation: " << ds.report.warm_converged << "/"
              << ds.report.requested << " warm, " << ds.report.fallback_used
              << " fallback, " << ds.samples.size() << " samples -> " << out_path << "\n";
    if (!report_path.empty()) {
      write_json(report_path, generate_report_json(ds.report, timing));
    }
  });

  auto* gback = gen->add_subcommand("backward", "Backward propagation from terminal ball");
  double radius = 0.05;
  std::string nominal_x0_csv;
  add_problem_flags(gback, pf);
  gback->add_option("--count", count, "Number of terminal draws");
  gback->add_option("--seed", seed, "Random seed");
  gback->add_option("--radius", radius, "Terminal ball radius");
  gback->add_option("--x0", nominal_x0_csv,
                    "Nominal initial state (default: one uniform draw)");
  gback->add_option("--workers", workers, "Worker threads");
  gback->add_option("--out", out_path, "Output dataset (JSONL)")->required();
  gback->add_option("--report", report_path, "Write a JSON generation report");
  gback->add_flag("--timing", timing, "Include wall times in reports");
  add_march_flags(gback, march_flags);
  add_config_file(gback);
  gback->callback([&] {
    const hjb::OcpDefinition ocp = make_problem(pf);
    const Eigen::VectorXd nominal_x0 =
        nominal_x0_csv.empty()
            ? hjb::draw_points(ocp, 1, hjb::derive_seed(seed, 0x6e6f6dULL)).front()
            : parse_vector(nominal_x0_csv);
    const hjb::BvpSolution nominal =
        hjb::march(ocp, ocp.t0, nominal_x0, march_flags.schedule(), march_flags.kind());
    hjb::BackwardGenOptions opts;
    opts.count = count;
    opts.radius = radius;
    opts.seed = seed;
    opts.workers = hjb::resolve_workers(workers);
    const hjb::BackwardGenResult res = hjb::generate_backward(ocp, nominal, opts);
    hjb::save_samples_jsonl(out_path, res.samples);
    std::cout << "backward generation: " << res.report.kept << "/" << res.report.requested
              << " trajectories kept, " << res.samples.size() << " samples -> " << out_path
              << "\n";
    if (!report_path.empty()) {
      ordered_json j;
      j["requested"] = res.report.requested;
      j["kept"] = res.report.kept;
      j["discarded"] = res.report.discarded;
      j["truncated"] = res.report.truncated;
      j["checks_run"] = res.report.checks_run;
      j["checks_failed"] = res.report.checks_failed;
      write_json(report_path, j);
    }
  });

  // train
  auto* tr = app.add_subcommand("train", "Train a value network on a dataset");
  hjb::TrainConfig tcfg;
  std::string hidden_csv = "64,64,64";
  add_problem_flags(tr, pf);
  tr->add_option("--data", data_path, "Training dataset (JSONL)")->required();
  tr->add_option("--out", out_path, "Output model (JSON)")->required();
  tr->add_option("--report", report_path, "Write a JSON training report");
  tr->add_option("--hidden", hidden_csv, "Hidden layer widths, e.g. 64,64,64");
  tr->add_option("--mu", tcfg.mu, "Costate-loss weight");
  tr->add_option("--adam-iters", tcfg.adam_iters, "Warmup iterations");
  tr->add_option("--adam-step", tcfg.adam_step, "Warmup step size");
  tr->add_option("--batch", tcfg.batch_size, "Warmup minibatch size");
  tr->add_option("--lbfgs-iters", tcfg.lbfgs_max_iters, "Quasi-Newton iteration cap");
  tr->add_option("--gtol", tcfg.lbfgs_gtol, "Quasi-Newton gradient tolerance");
  tr->add_option("--seed", tcfg.seed, "Random seed");
  tr->add_flag("--timing", timing, "Include wall times in reports");
  add_config_file(tr);
  tr->callback([&] {
    const hjb::OcpDefinition ocp = make_problem(pf);
    const auto data = hjb::load_samples_jsonl(data_path);
    const auto norm =
        hjb::AffineNormalizer::from_domain(ocp.t0, ocp.tf, ocp.sample_domain);
    const hjb::MlpModel init = hjb::make_mlp(parse_int_list(hidden_csv), ocp.state_dim,
                                             norm, hjb::derive_seed(tcfg.seed, 0x6e6574ULL));
    const auto start = std::chrono::steady_clock::now();
    auto [model, history] = hjb::train(init, data, tcfg);
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start).count();
    hjb::save_mlp(model, out_path);
    std::cout << "trained on " << data.size() << " samples: loss "
              << history.initial_loss << " -> " << history.final_loss << " ("
              << history.adam_iterations << " warmup + " << history.lbfgs_iterations
              << " quasi-Newton iterations) -> " << out_path << "\n";
    if (!report_path.empty()) {
      ordered_json j;
      j["samples"] = data.size();
      j["initial_loss"] = history.initial_loss;
      j["final_loss"] = history.final_loss;
      j["adam_iterations"] = history.adam_iterations;
      j["lbfgs_iterations"] = history.lbfgs_iterations;
      if (timing) j["wall_seconds"] = secs;
      write_json(report_path, j);
    }
  });

  // adapt
  auto* ad = app.add_subcommand("adapt", "Adaptive multi-round generate/train loop");
  std::string rounds_csv = "64,128,1024,4096";
  hjb::AdaptiveOptions aopts;
  bool no_fallback = false;
  add_problem_flags(ad, pf);
  ad->add_option("--rounds", rounds_csv, "Cumulative initial-point counts per round");
  ad->add_option("--pool-mult", aopts.plan.pool_multiplier, "Candidate pool multiplier");
  ad->add_option("--steep-frac", aopts.plan.steep_fraction, "Steepness-selected fraction");
  ad->add_option("--val-count", aopts.validation_count, "Validation point count");
  ad->add_option("--hidden", hidden_csv, "Hidden layer widths");
  ad->add_option("--mu", aopts.train.mu, "Costate-loss weight");
  ad->add_option("--adam-iters", aopts.train.adam_iters, "Warmup iterations");
  ad->add_option("--batch", aopts.train.batch_size, "Warmup minibatch size");
  ad->add_option("--lbfgs-iters", aopts.train.lbfgs_max_iters, "Quasi-Newton cap");
  ad->add_option("--seed", seed, "Random seed");
  ad->add_option("--workers", workers, "Worker threads");
  ad->add_option("--out", out_path, "Output model (JSON)")->required();
  ad->add_option("--data-out", data_path, "Also write the cumulative dataset (JSONL)");
  ad->add_option("--report", report_path, "Write a JSON per-round report");
  ad->add_option("--interior-stride", interior_stride, "Interior mesh stride");
  ad->add_flag("--no-fallback", no_fallback, "Disable march fallback in warm rounds");
  ad->add_flag("--timing", timing, "Include wall times in reports");
  add_march_flags(ad, march_flags);
  add_config_file(ad);
  ad->callback([&] {
    const hjb::OcpDefinition ocp = make_problem(pf);
    aopts.plan.sizes = parse_int_list(rounds_csv);
    aopts.hidden_widths = parse_int_list(hidden_csv);
    aopts.warm_fallback = !no_fallback;
    aopts.seed = seed;
    aopts.gen.schedule = march_flags.schedule();
    aopts.gen.extension = march_flags.kind();
    aopts.gen.interior_stride = interior_stride;
    aopts.gen.workers = workers;
    const hjb::AdaptiveResult res = hjb::run_adaptive(ocp, aopts);
    hjb::save_mlp(res.model, out_path);
    if (!data_path.empty()) hjb::save_samples_jsonl(data_path, res.data);
    for (std::size_t r = 0; r < res.rounds.size(); ++r) {
      std::cout << "round " << (r + 1) << ": " << res.generation[r].converged << "/"
                << res.generation[r].requested << " points, train loss "
                << res.training[r].final_loss << ", validation rel V error "
                << res.rounds[r].rel_l2_v << "\n";
    }
    std::cout << "final model -> " << out_path << "\n";
    if (!report_path.empty()) {
      ordered_json rounds = ordered_json::array();
      for (std::size_t r = 0; r < res.rounds.size(); ++r) {
        ordered_json j;
        j["generation"] = generate_report_json(res.generation[r], timing);
        j["final_loss"] = res.training[r].final_loss;
        j["validation"] = validation_report_json(res.rounds[r], timing);
        rounds.push_back(j);
      }
      write_json(report_path, ordered_json{{"rounds", rounds}});
    }
  });

  // validate
  auto* val = app.add_subcommand("validate", "Score a model against marched ground truth");
  add_problem_flags(val, pf);
  val->add_option("--model", model_path, "Trained model (JSON)")->required();
  val->add_option("--count", count, "Validation point count");
  val->add_option("--seed", seed, "Random seed");
  val->add_option("--workers", workers, "Worker threads");
  val->add_option("--report", report_path, "Write a JSON validation report");
  val->add_flag("--timing", timing, "Include wall times in reports");
  add_march_flags(val, march_flags);
  add_config_file(val);
  val->callback([&] {
    const hjb::OcpDefinition ocp = make_problem(pf);
    const hjb::MlpModel model = hjb::load_mlp(model_path);
    hjb::PointGenOptions opts;
    opts.schedule = march_flags.schedule();
    opts.extension = march_flags.kind();
    opts.workers = workers;
    const hjb::ValidationReport rep = hjb::validate(model, ocp, count, seed, opts);
    std::cout << "validation on " << rep.samples << "/" << rep.requested
              << " points: rel L2 V error " << rep.rel_l2_v << ", rel L2 lambda error "
              << rep.rel_l2_lambda << "\n";
    if (!report_path.empty()) write_json(report_path, validation_report_json(rep, timing));
  });

  // solve-point
  auto* sp = app.add_subcommand("solve-point", "Value at one (t0, x0) by a chosen method");
  std::string method = "tpbvp";
  std::string x0_csv;
  std::string hopf_id = "quadratic";
  double t0_flag = 0.0, hopf_t = 1.0, ps_eps = 1e-6;
  int ps_order = 16, starts = 0, dim_flag = 0;
  add_problem_flags(sp, pf);
  sp->add_option("--method", method, "tpbvp|charmin|hopf|ps");
  sp->add_option("--x0", x0_csv, "Initial state, comma separated")->required();
  sp->add_option("--t0", t0_flag, "Initial time");
  sp->add_option("--seed", seed, "Random seed for multi-starts");
  sp->add_option("--starts", starts, "Multi-start count override");
  sp->add_option("--order", ps_order, "Pseudospectral order N");
  sp->add_option("--eps", ps_eps, "Pseudospectral feasibility relaxation");
  sp->add_option("--hopf-problem", hopf_id, "Hopf problem id (hopf method)");
  sp->add_option("--t", hopf_t, "Query time (hopf method)");
  sp->add_option("--dim", dim_flag, "Dimension override (hopf method)");
  add_march_flags(sp, march_flags);
  add_config_file(sp);
  sp->callback([&] {
    const Eigen::VectorXd x0 = parse_vector(x0_csv);
    ordered_json j;
    j["method"] = method;
    if (method == "tpbvp") {
      const hjb::OcpDefinition ocp = make_problem(pf);
      const hjb::BvpSolution sol =
          hjb::march(ocp, t0_flag, x0, march_flags.schedule(), march_flags.kind());
      const int n = ocp.state_dim;
      j["problem"] = pf.id;
      j["t0"] = t0_flag;
      j["x0"] = to_std(x0);
      j["V"] = sol.y.front()[2 * n];
      j["lambda0"] = to_std(sol.y.front().segment(n, n));
      j["newton_iterations"] = sol.report.newton_iterations;
      j["mesh_points"] = sol.report.mesh_points;
    } else if (method == "charmin") {
      const hjb::OcpDefinition ocp = make_problem(pf);
      hjb::CharMinOptions copts;
      copts.seed = seed;
      if (starts > 0) copts.starts = starts;
      const hjb::CharMinResult res = hjb::char_min_value(ocp, t0_flag, x0, copts);
      j["problem"] = pf.id;
      j["t0"] = t0_flag;
      j["x0"] = to_std(x0);
      j["V"] = res.value;
      j["lambda0"] = to_std(res.lambda0);
      j["evaluations"] = res.evaluations;
    } else if (method == "hopf") {
      const int dim = dim_flag > 0 ? dim_flag : static_cast<int>(x0.size());
      const hjb::HopfProblem hp = make_hopf_by_id(hopf_id, dim);
      hjb::HopfOptions hopts;
      hopts.seed = seed;
      if (starts > 0) hopts.starts = starts;
      j["problem"] = hopf_id;
      j["t"] = hopf_t;
      j["x0"] = to_std(x0);
      j["V"] = hjb::hopf_solve(hp, hopf_t, x0, hopts);
    } else if (method == "ps") {
      const hjb::OcpDefinition ocp = make_problem(pf);
      hjb::PsOptions popts;
      popts.order = ps_order;
      popts.eps = ps_eps;
      const hjb::PsSolution sol = hjb::solve_ps(ocp, t0_flag, x0, popts);
      j["problem"] = pf.id;
      j["t0"] = t0_flag;
      j["x0"] = to_std(x0);
      j["V"] = sol.value;
      j["max_defect"] = sol.max_defect;
      j["penalty_stages"] = sol.stages_used;
    } else {
      throw ConfigError("unknown method '" + method + "' (tpbvp|charmin|hopf|ps)");
    }
    std::cout << j.dump(2) << "\n";
    if (!report_path.empty()) write_json(report_path, j);
  });
  sp->add_option("--report", report_path, "Also write the JSON result to a file");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Closed-loop rollout under the model feedback");
  add_problem_flags(sim, pf);
  sim->add_option("--model", model_path, "Trained model (JSON)")->required();
  sim->add_option("--x0", x0_csv, "Initial state, comma separated")->required();
  sim->add_option("--t0", t0_flag, "Initial time");
  sim->add_option("--traj-out", out_path, "Write the trajectory as CSV");
  sim->add_option("--report", report_path, "Write a JSON simulation report");
  add_config_file(sim);
  sim->callback([&] {
    const hjb::OcpDefinition ocp = make_problem(pf);
    const hjb::MlpModel model = hjb::load_mlp(model_path);
    const Eigen::VectorXd x0 = parse_vector(x0_csv);
    const hjb::ClosedLoopResult res = hjb::closed_loop_sim(model, ocp, t0_flag, x0);
    const double v_model = hjb::mlp_forward(model, t0_flag, x0);
    std::cout << "realized cost " << res.realized_cost << " (model value " << v_model
              << ")\n";
    if (!out_path.empty()) {
      std::ofstream csv(out_path);
      if (!csv) throw ConfigError("cannot open trajectory file: " + out_path);
      csv << "t";
      for (int i = 0; i < ocp.state_dim; ++i) csv << ",x" << i;
      csv << "\n";
      csv.precision(17);
      for (std::size_t k = 0; k < res.trajectory.mesh.size(); ++k) {
        csv << res.trajectory.mesh[k];
        for (int i = 0; i < ocp.state_dim; ++i) csv << "," << res.trajectory.states[k][i];
        csv << "\n";
      }
    }
    if (!report_path.empty()) {
      ordered_json j;
      j["t0"] = t0_flag;
      j["x0"] = to_std(x0);
      j["realized_cost"] = res.realized_cost;
      j["model_value"] = v_model;
      write_json(report_path, j);
    }
  });

  // lgl
  auto* lg = app.add_subcommand("lgl", "Dump an LGL grid (nodes, weights, D) as CSV");
  int lgl_order = 16;
  lg->add_option("--order", lgl_order, "Grid order N")->required();
  lg->add_option("--out", out_path, "Output CSV (default stdout)");
  add_config_file(lg);
  lg->callback([&] {
    const hjb::LglGrid grid = hjb::lgl_grid(lgl_order);
    std::ostringstream csv;
    csv.precision(17);
    csv << "k,node,weight\n";
    for (int k = 0; k <= grid.order; ++k) {
      csv << k << "," << grid.nodes[k] << "," << grid.weights[k] << "\n";
    }
    csv << "D\n";
    for (int r = 0; r <= grid.order; ++r) {
      for (int c = 0; c <= grid.order; ++c) {
        csv << grid.diff(r, c) << (c == grid.order ? "\n" : ",");
      }
    }
    if (out_path.empty()) {
      std::cout << csv.str();
    } else {
      std::ofstream out(out_path);
      if (!out) throw ConfigError("cannot open output file: " + out_path);
      out << csv.str();
    }
  });

  try {
    app.name("hjb");
    std::vector<std::string> args =
        with_config_applied(std::vector<std::string>(argv + 1, argv + argc));
    std::reverse(args.begin(), args.end());  // CLI11's token-vector convention
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help or the usage error
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const hjb::Error& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
