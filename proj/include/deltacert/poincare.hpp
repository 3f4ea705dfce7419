#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "deltacert/hybrid.hpp"
#include "deltacert/types.hpp"

namespace deltacert {

/// Fixed point of the nominal return map together with its local data.
struct PeriodicOrbit {
  Vector x_star;
  double period = 0.0;
  Matrix jacobian;
  double spectral_radius = 0.0;
  double residual = 0.0;  // ||P_0(x_star) - x_star||
  int newton_iterations = 0;

  bool stable() const { return spectral_radius < 1.0; }
};

/// Guard-level sequence for a rollout; |values[k]| <= delta must hold.
struct DisturbanceSequence {
  std::vector<double> values;
  double delta = 0.0;

  void validate() const;
};

/// Orbit of the disturbed return map. A step that escapes the map's domain
/// truncates the rollout and is recorded rather than thrown.
struct RolloutResult {
  std::vector<Vector> states;  // x_1 .. x_K (x_0 not included)
  std::optional<std::size_t> truncated_step;
  std::string truncation_reason;

  bool truncated() const { return truncated_step.has_value(); }
};

/// Extended return map: reset x_minus, then flow to the descending crossing
/// of h = d. Throws NoImpact / GrazingEvent / ResetDomainError where the
/// map is undefined.
Vector poincare_extended(const HybridSystemModel& sys, const Vector& x_minus,
                         double d, const IntegratorConfig& cfg);

RolloutResult rollout(const HybridSystemModel& sys, const Vector& x0,
                      const DisturbanceSequence& ds,
                      const IntegratorConfig& cfg);

struct FixedPointConfig {
  double tol_scale = 1e-9;  // converged when ||P0(x)-x|| <= tol_scale*(1+||x||)
  int max_iterations = 50;
  double fd_step = 1e-6;
  int max_backtracks = 8;
};

/// Damped Newton solve of P_0(x) = x on the section h = 0. The guess is
/// first projected onto the section along the guard gradient.
PeriodicOrbit find_fixed_point(const HybridSystemModel& sys,
                               const Vector& x_guess,
                               const IntegratorConfig& cfg,
                               const FixedPointConfig& fp = {});

/// Central-difference Jacobian of the nominal map at x_star with
/// per-coordinate step fd_step * (1 + |x_star_i|). Domain errors propagate.
Matrix linearize(const HybridSystemModel& sys, const Vector& x_star,
                 double fd_step, const IntegratorConfig& cfg);

/// Largest eigenvalue magnitude of a real square matrix.
double spectral_radius(const Matrix& A);

struct DomainProbeConfig {
  double r0 = 1e-3;
  double growth = 1.5;
  int samples = 32;
  double r_max = 1e3;
  std::uint64_t seed = 0;
};

/// Empirical radius of the ball around x_star on which the nominal map
/// evaluates cleanly: radii grow geometrically until a sphere sample fails,
/// and the last fully valid radius is returned. A lower estimate, not a
/// proof.
double estimate_domain_radius(const HybridSystemModel& sys,
                              const Vector& x_star,
                              const IntegratorConfig& cfg,
                              const DomainProbeConfig& probe = {});

}  // namespace deltacert
