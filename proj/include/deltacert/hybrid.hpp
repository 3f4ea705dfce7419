#pragma once

#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "deltacert/errors.hpp"
#include "deltacert/types.hpp"

namespace deltacert {

/// Tolerances and guards for the adaptive integrator and event location.
struct IntegratorConfig {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = 0.25;         // seconds
  double event_tol = 1e-10;       // |h(x) - d| at a located crossing
  double t_dwell = 1e-6;          // crossings earlier than this are ignored
  double max_horizon = 10.0;      // per-flight time budget
  double blowup_norm = 1e6;       // ||x|| beyond which the flight is abandoned
  double grazing_rate_tol = 1e-8; // |dh/dt| below this flags a grazing event
  int dense_samples = 16;         // guard sign-scan points per accepted step

  /// Throws DegenerateConfig unless every field is strictly positive and
  /// event_tol >= abs_tol.
  void validate() const;
};

/// Closed-loop hybrid model with a single guard family h(x) = d and a
/// reset map applied at descending crossings. All callables must be pure.
struct HybridSystemModel {
  int dim = 0;
  std::string name;

  std::function<Vector(const Vector&)> vector_field;
  std::function<double(const Vector&)> guard;
  /// Optional analytic gradient of the guard; finite differences otherwise.
  std::function<Vector(const Vector&)> guard_gradient;
  /// Reset map; throws ResetDomainError where undefined.
  std::function<Vector(const Vector&)> reset;
  /// Optional phase gate: descending crossings are only accepted where this
  /// returns true. Used to mask spurious mid-phase crossings.
  std::function<bool(const Vector&)> guard_armed;

  /// Guard levels d outside [guard_min, guard_max] are rejected.
  double guard_min = -std::numeric_limits<double>::infinity();
  double guard_max = std::numeric_limits<double>::infinity();

  /// Characteristic scale per coordinate; deviations are measured in the
  /// Euclidean norm after dividing coordinate-wise by these.
  Vector state_scale;
  std::vector<std::string> state_names;
  std::map<std::string, double> params;

  /// state_scale, padded with ones when unset.
  Vector scale_or_ones() const;
};

struct GuardCrossing {
  double level = 0.0;
  double time = 0.0;
};

/// Continuous-dynamics solution sampled at accepted integrator steps.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  std::optional<GuardCrossing> event;
};

/// Integrates the continuous dynamics from x0 over [0, t_end]. No guard
/// handling, no resets.
Trajectory flow(const HybridSystemModel& sys, const Vector& x0, double t_end,
                const IntegratorConfig& cfg);

/// First time t >= t_dwell with h(x(t)) = d and dh/dt < 0, flowing from
/// x_post. Throws NoImpact or GrazingEvent when the crossing is missing or
/// non-transversal.
double time_to_impact(const HybridSystemModel& sys, const Vector& x_post,
                      double d, const IntegratorConfig& cfg);

/// Result of flowing from a post-reset state to a guard crossing.
struct ImpactFlow {
  double time = 0.0;
  Vector state;
  Trajectory trajectory;
};

/// As time_to_impact, but also returns the crossing state and the flown
/// trajectory (event recorded in trajectory.event).
ImpactFlow flow_to_guard(const HybridSystemModel& sys, const Vector& x_post,
                         double d, const IntegratorConfig& cfg);

/// Applies the model's reset map.
Vector apply_reset(const HybridSystemModel& sys, const Vector& x_minus);

/// dh/dt along the flow: grad(h) . f(x). Falls back to central differences
/// with step 1e-6 * (1 + ||x||) when no analytic gradient is declared.
double guard_rate(const HybridSystemModel& sys, const Vector& x);

/// Gradient of the guard at x (analytic if declared, else central FD).
Vector guard_gradient_or_fd(const HybridSystemModel& sys, const Vector& x);

}  // namespace deltacert
