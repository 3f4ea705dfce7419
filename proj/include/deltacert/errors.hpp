#pragma once

#include <stdexcept>
#include <string>

namespace deltacert {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// State norm exceeded the configured blow-up bound during integration.
class IntegrationDiverged final : public Error {
 public:
  using Error::Error;
};

/// Adaptive step size collapsed below the representable floor.
class StepUnderflow final : public Error {
 public:
  using Error::Error;
};

/// No descending guard crossing was found within the integration horizon.
class NoImpact final : public Error {
 public:
  using Error::Error;
};

/// Guard crossing located, but the guard rate there is below the
/// transversality threshold.
class GrazingEvent final : public Error {
 public:
  using Error::Error;
};

/// The model's reset map rejected the supplied pre-impact state.
class ResetDomainError final : public Error {
 public:
  using Error::Error;
};

/// An iterative solver exhausted its budget without meeting tolerance.
class NoConvergence final : public Error {
 public:
  using Error::Error;
};

/// Newton step could not be solved (rank-deficient Jacobian).
class SingularJacobian final : public Error {
 public:
  using Error::Error;
};

/// Matrix is not Schur stable where stability is required.
class NotStable final : public Error {
 public:
  using Error::Error;
};

class NotSymmetric final : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite final : public Error {
 public:
  using Error::Error;
};

/// Contact inertia block is singular in an impact solve.
class SingularContact final : public Error {
 public:
  using Error::Error;
};

/// Requested disturbance bound violates a certificate hypothesis.
class HypothesisViolated final : public Error {
 public:
  using Error::Error;
};

/// Constants handed to a certification routine are inconsistent.
class BadConstants final : public Error {
 public:
  using Error::Error;
};

/// A configuration struct failed validation.
class DegenerateConfig final : public Error {
 public:
  using Error::Error;
};

}  // namespace deltacert
