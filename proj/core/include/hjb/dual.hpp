#pragma once

#include <Eigen/Core>
#include <cmath>
#include <functional>
#include <utility>

#include "hjb/errors.hpp"

namespace hjb {

/// Forward-mode dual scalar: carries a value and one directional derivative.
/// Gradients of R^k -> R maps are assembled from k seeded passes.
struct Dual {
  double v = 0.0;
  double d = 0.0;

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT: implicit by design
  Dual(double value, double deriv) : v(value), d(deriv) {}

  Dual& operator+=(const Dual& r) { v += r.v; d += r.d; return *this; }
  Dual& operator-=(const Dual& r) { v -= r.v; d -= r.d; return *this; }
  Dual& operator*=(const Dual& r) { d = d * r.v + v * r.d; v *= r.v; return *this; }
  Dual& operator/=(const Dual& r) { d = (d * r.v - v * r.d) / (r.v * r.v); v /= r.v; return *this; }
};

inline Dual operator+(Dual a, const Dual& b) { return a += b; }
inline Dual operator-(Dual a, const Dual& b) { return a -= b; }
inline Dual operator*(Dual a, const Dual& b) { return a *= b; }
inline Dual operator/(Dual a, const Dual& b) { return a /= b; }
inline Dual operator-(const Dual& a) { return {-a.v, -a.d}; }
inline Dual operator+(const Dual& a) { return a; }

inline bool operator<(const Dual& a, const Dual& b) { return a.v < b.v; }
inline bool operator>(const Dual& a, const Dual& b) { return a.v > b.v; }
inline bool operator<=(const Dual& a, const Dual& b) { return a.v <= b.v; }
inline bool operator>=(const Dual& a, const Dual& b) { return a.v >= b.v; }
inline bool operator==(const Dual& a, const Dual& b) { return a.v == b.v; }
inline bool operator!=(const Dual& a, const Dual& b) { return a.v != b.v; }

inline Dual sin(const Dual& x) { return {std::sin(x.v), std::cos(x.v) * x.d}; }
inline Dual cos(const Dual& x) { return {std::cos(x.v), -std::sin(x.v) * x.d}; }
inline Dual tan(const Dual& x) {
  const double t = std::tan(x.v);
  return {t, (1.0 + t * t) * x.d};
}
inline Dual exp(const Dual& x) {
  const double e = std::exp(x.v);
  return {e, e * x.d};
}
inline Dual log(const Dual& x) { return {std::log(x.v), x.d / x.v}; }
inline Dual sqrt(const Dual& x) {
  const double s = std::sqrt(x.v);
  return {s, 0.5 * x.d / s};
}
inline Dual tanh(const Dual& x) {
  const double t = std::tanh(x.v);
  return {t, (1.0 - t * t) * x.d};
}
inline Dual atan(const Dual& x) { return {std::atan(x.v), x.d / (1.0 + x.v * x.v)}; }
inline Dual pow(const Dual& x, double p) {
  return {std::pow(x.v, p), p * std::pow(x.v, p - 1.0) * x.d};
}
inline Dual abs(const Dual& x) { return x.v < 0.0 ? -x : x; }
inline Dual abs2(const Dual& x) { return x * x; }
inline const Dual& conj(const Dual& x) { return x; }
inline const Dual& real(const Dual& x) { return x; }
inline Dual imag(const Dual&) { return {0.0, 0.0}; }

inline bool isfinite(const Dual& x) { return std::isfinite(x.v) && std::isfinite(x.d); }

/// Value part of a scalar; lets numeric kernels be generic over double/Dual.
inline double scalar_value(double x) { return x; }
inline double scalar_value(const Dual& x) { return x.v; }

}  // namespace hjb

// Eigen scalar traits must precede the first Matrix<Dual, ...> instantiation.
namespace Eigen {

template <>
struct NumTraits<hjb::Dual> : NumTraits<double> {
  typedef hjb::Dual Real;
  typedef hjb::Dual NonInteger;
  typedef hjb::Dual Nested;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 2,
    AddCost = 4,
    MulCost = 8
  };
};

}  // namespace Eigen

namespace hjb {

using DualVector = Eigen::Matrix<Dual, Eigen::Dynamic, 1>;
using DualMatrix = Eigen::Matrix<Dual, Eigen::Dynamic, Eigen::Dynamic>;

inline DualVector to_dual(const Eigen::VectorXd& x) {
  DualVector out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = Dual(x[i]);
  return out;
}

inline Eigen::VectorXd values_of(const DualVector& x) {
  Eigen::VectorXd out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = x[i].v;
  return out;
}

/// Value and exact gradient of a scalar field, by k seeded forward passes.
std::pair<double, Eigen::VectorXd> dual_diff(
    const std::function<Dual(const DualVector&)>& g, const Eigen::VectorXd& x);

/// Jacobian (rows = outputs) of a vector field by seeded forward passes.
Eigen::MatrixXd dual_jacobian(
    const std::function<DualVector(const DualVector&)>& f, const Eigen::VectorXd& x);

}  // namespace hjb
