#include "hjb/hopf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hjb/errors.hpp"
#include "hjb/optimize.hpp"
#include "hjb/rng.hpp"

namespace hjb {

double QuadraticForm::value(const Eigen::VectorXd& x) const {
  return 0.5 * x.dot(A * x) + b.dot(x) + c;
}

Eigen::VectorXd QuadraticForm::gradient(const Eigen::VectorXd& x) const {
  return A * x + b;
}

QuadraticForm QuadraticForm::conjugate() const {
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) {
    throw ConfigError("quadratic form is not positive definite; no closed-form conjugate");
  }
  QuadraticForm dual;
  dual.A = llt.solve(Eigen::MatrixXd::Identity(A.rows(), A.cols()));
  dual.b = -dual.A * b;
  dual.c = 0.5 * b.dot(dual.A * b) - c;
  return dual;
}

ScalarField QuadraticForm::field() const {
  QuadraticForm q = *this;
  ScalarField f;
  f.dim = static_cast<int>(q.b.size());
  f.value = [q](const Eigen::VectorXd& x) { return q.value(x); };
  f.gradient = [q](const Eigen::VectorXd& x) { return q.gradient(x); };
  return f;
}

HopfProblem make_hopf_problem(const QuadraticForm& psi, ScalarField hamiltonian) {
  HopfProblem p;
  p.dim = static_cast<int>(psi.b.size());
  p.initial = psi.field();
  p.conjugate = psi.conjugate().field();
  p.hamiltonian = std::move(hamiltonian);
  return p;
}

HopfProblem make_hopf_problem(ScalarField psi, ScalarField hamiltonian) {
  HopfProblem p;
  p.dim = psi.dim;
  p.initial = std::move(psi);
  p.hamiltonian = std::move(hamiltonian);
  return p;
}

HopfProblem make_quadratic_hopf(int dim) {
  QuadraticForm psi;
  psi.A = Eigen::MatrixXd::Identity(dim, dim);
  psi.b = Eigen::VectorXd::Zero(dim);
  psi.c = 0.0;
  ScalarField h;
  h.dim = dim;
  h.value = [](const Eigen::VectorXd& p) { return 0.5 * p.squaredNorm(); };
  h.gradient = [](const Eigen::VectorXd& p) { return Eigen::VectorXd(p); };
  return make_hopf_problem(psi, std::move(h));
}

namespace {

struct StartResult {
  double value = std::numeric_limits<double>::infinity();
  double grad_norm = std::numeric_limits<double>::infinity();
  Eigen::VectorXd arg;
  bool valid = false;
};

// Runs multi-start L-BFGS on phi; keeps the best iterate whose gradient
// meets gtol, falling back to the best value seen if none does.
StartResult multistart_minimize(const GradObjectiveFn& phi, int dim,
                                const Eigen::VectorXd& anchor, double radius,
                                const HopfOptions& opts) {
  LbfgsOptions lopts;
  lopts.max_iters = opts.max_iters;
  lopts.gtol = opts.gtol;

  Rng rng(derive_seed(opts.seed, 0x686f7066ULL));
  StartResult best;
  StartResult best_any;
  const int starts = std::max(1, opts.starts);
  for (int s = 0; s < starts; ++s) {
    Eigen::VectorXd x0(dim);
    if (s == 0) {
      x0 = anchor;
    } else if (s == 1) {
      x0.setZero();
    } else {
      for (int i = 0; i < dim; ++i) x0[i] = rng.uniform(-radius, radius);
    }
    OptimizeResult res;
    try {
      res = lbfgs(phi, x0, lopts);
    } catch (const Unbounded&) {
      throw;
    } catch (const Error&) {
      continue;  // line-search breakdown at this start; other starts may succeed
    }
    Eigen::VectorXd g(dim);
    const double f = phi(res.x, g);
    const double gn = g.norm();
    if (!std::isfinite(f)) continue;
    if (!best_any.valid || f < best_any.value) {
      best_any = {f, gn, res.x, true};
    }
    if (gn <= opts.gtol && (!best.valid || f < best.value)) {
      best = {f, gn, res.x, true};
    }
  }
  return best.valid ? best : best_any;
}

}  // namespace

ConjugateResult fenchel_conjugate(const ScalarField& f, const Eigen::VectorXd& z,
                                  const HopfOptions& opts) {
  const int dim = static_cast<int>(z.size());
  const double bound = opts.unbounded_threshold;
  // Minimize phi(x) = f(x) - x.z; the conjugate is -min phi.
  GradObjectiveFn phi = [&f, &z, bound](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    const double v = f.value(x) - x.dot(z);
    if (v < -bound) throw Unbounded("fenchel ascent objective exceeded threshold");
    grad = f.gradient(x) - z;
    return v;
  };
  const StartResult best = multistart_minimize(phi, dim, z, 2.0 * (1.0 + z.norm()), opts);
  if (!best.valid) throw NoConvergence("fenchel conjugate: all ascent starts failed");
  if (best.grad_norm > opts.gtol) {
    throw NoConvergence("fenchel conjugate: gradient tolerance unmet at all starts");
  }
  return ConjugateResult{-best.value, best.arg};
}

double hopf_solve(const HopfProblem& problem, double t, const Eigen::VectorXd& x,
                  const HopfOptions& opts) {
  if (t < 0.0) throw ConfigError("hopf_solve requires t >= 0");
  const int dim = problem.dim;
  const double bound = opts.unbounded_threshold;

  // psi* and its gradient; the numeric fallback recovers the gradient as the
  // maximizer of the inner transform (envelope theorem).
  std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)> conj;
  if (problem.conjugate) {
    const ScalarField& cf = *problem.conjugate;
    conj = [&cf](const Eigen::VectorXd& v, Eigen::VectorXd& grad) {
      grad = cf.gradient(v);
      return cf.value(v);
    };
  } else {
    const ScalarField& psi = problem.initial;
    HopfOptions inner = opts;
    inner.starts = std::max(2, opts.starts / 2);
    conj = [&psi, inner](const Eigen::VectorXd& v, Eigen::VectorXd& grad) {
      const ConjugateResult r = fenchel_conjugate(psi, v, inner);
      grad = r.arg;
      return r.value;
    };
  }

  GradObjectiveFn phi = [&](const Eigen::VectorXd& v, Eigen::VectorXd& grad) {
    Eigen::VectorXd gc(dim);
    const double star = conj(v, gc);
    const double obj = star + t * problem.hamiltonian.value(v) - x.dot(v);
    if (obj < -bound) throw Unbounded("hopf objective exceeded threshold");
    grad = gc + t * problem.hamiltonian.gradient(v) - x;
    return obj;
  };

  // Start box shrinks with horizon: the minimizing slope v scales like x/(1+t).
  const double radius = 2.0 * (1.0 + x.norm()) / (1.0 + t);
  const Eigen::VectorXd anchor = x / (1.0 + t);
  const StartResult best = multistart_minimize(phi, dim, anchor, radius, opts);
  if (!best.valid) throw NoConvergence("hopf_solve: all starts failed");
  if (best.grad_norm > opts.gtol) {
    throw NoConvergence("hopf_solve: gradient tolerance unmet at all starts");
  }
  return -best.value;
}

bool midpoint_convex(const ScalarField& f, double radius, int pairs, std::uint64_t seed) {
  Rng rng(seed);
  const int dim = f.dim;
  Eigen::VectorXd a(dim), b(dim);
  for (int k = 0; k < pairs; ++k) {
    for (int i = 0; i < dim; ++i) {
      a[i] = rng.uniform(-radius, radius);
      b[i] = rng.uniform(-radius, radius);
    }
    const double lhs = f.value(0.5 * (a + b));
    const double rhs = 0.5 * (f.value(a) + f.value(b));
    if (lhs > rhs + 1e-10 * (1.0 + std::abs(rhs))) return false;
  }
  return true;
}

}  // namespace hjb
