#pragma once

#include <stdexcept>
#include <string>

namespace hjb {

/// Base class for every failure raised by this library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A computation produced NaN or Inf. `where` is the time (or iterate index)
/// at which the value blew up, when known.
class NonFiniteValue : public Error {
public:
  explicit NonFiniteValue(const std::string& msg, double where = 0.0)
      : Error(msg), where_(where) {}
  double where() const { return where_; }

private:
  double where_;
};

/// Adaptive integrator step size shrank below the resolvable scale.
class StepUnderflow : public Error {
public:
  using Error::Error;
};

/// Euler-angle pitch too close to +-pi/2 for tan/sec to be finite.
class GimbalSingularity : public Error {
public:
  using Error::Error;
};

/// Newton iteration exhausted its budget without meeting the tolerance.
class MaxIterations : public Error {
public:
  using Error::Error;
};

/// Linear solve of the Newton system failed.
class SingularJacobian : public Error {
public:
  using Error::Error;
};

/// Mesh refinement would exceed the hard point cap.
class MeshLimitExceeded : public Error {
public:
  using Error::Error;
};

/// Time-marching gave up before reaching the final horizon.
class ContinuationFailed : public Error {
public:
  ContinuationFailed(const std::string& msg, double horizon_reached)
      : Error(msg), horizon_(horizon_reached) {}
  double horizon_reached() const { return horizon_; }

private:
  double horizon_;
};

class EmptyDataset : public Error {
public:
  using Error::Error;
};

/// Objective escaped to infinity during an ascent/descent.
class Unbounded : public Error {
public:
  using Error::Error;
};

/// No optimizer start met the gradient tolerance.
class NoConvergence : public Error {
public:
  using Error::Error;
};

/// Every candidate trajectory of a minimization-over-characteristics failed.
class AllCandidatesFailed : public Error {
public:
  using Error::Error;
};

/// Two characteristics reached the same point with different values.
class ShockDetected : public Error {
public:
  using Error::Error;
};

class NoCharacteristicFound : public Error {
public:
  using Error::Error;
};

class AllSolvesFailed : public Error {
public:
  using Error::Error;
};

/// Penalty homotopy ended with constraint violation above the relaxation.
class InfeasibleAtMaxPenalty : public Error {
public:
  using Error::Error;
};

/// Node computation for a spectral grid failed to converge.
class NewtonFailure : public Error {
public:
  using Error::Error;
};

/// Backward-generated dataset failed its spot-check against the TPBVP solver.
class DatasetRejected : public Error {
public:
  using Error::Error;
};

/// Bad configuration value or unknown key.
class ConfigError : public Error {
public:
  using Error::Error;
};

}  // namespace hjb
