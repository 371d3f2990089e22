#include "hjb/dual.hpp"

namespace hjb {

std::pair<double, Eigen::VectorXd> dual_diff(
    const std::function<Dual(const DualVector&)>& g, const Eigen::VectorXd& x) {
  const Eigen::Index k = x.size();
  Eigen::VectorXd grad(k);
  DualVector xd = to_dual(x);
  double value = 0.0;
  for (Eigen::Index j = 0; j < k; ++j) {
    xd[j].d = 1.0;
    const Dual out = g(xd);
    xd[j].d = 0.0;
    if (!isfinite(out))
      throw NonFiniteValue("dual_diff: non-finite value in seeded pass " + std::to_string(j));
    value = out.v;
    grad[j] = out.d;
  }
  if (k == 0) {
    const Dual out = g(xd);
    if (!isfinite(out)) throw NonFiniteValue("dual_diff: non-finite value");
    value = out.v;
  }
  return {value, grad};
}

Eigen::MatrixXd dual_jacobian(
    const std::function<DualVector(const DualVector&)>& f, const Eigen::VectorXd& x) {
  const Eigen::Index k = x.size();
  DualVector xd = to_dual(x);
  Eigen::MatrixXd jac;
  for (Eigen::Index j = 0; j < k; ++j) {
    xd[j].d = 1.0;
    const DualVector out = f(xd);
    xd[j].d = 0.0;
    if (jac.size() == 0) jac.resize(out.size(), k);
    for (Eigen::Index i = 0; i < out.size(); ++i) {
      if (!isfinite(out[i]))
        throw NonFiniteValue("dual_jacobian: non-finite value in component " + std::to_string(i));
      jac(i, j) = out[i].d;
    }
  }
  return jac;
}

}  // namespace hjb
