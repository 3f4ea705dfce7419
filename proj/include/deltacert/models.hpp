#pragma once

#include "deltacert/hybrid.hpp"
#include "deltacert/types.hpp"

namespace deltacert {

struct BouncingBallParams {
  double g = 9.81;  // gravity, m/s^2
  double e = 0.8;   // restitution
  double u0 = 1.0;  // actuation kick added at impact, m/s

  void validate() const;
};

/// Actuated bouncing ball. State (y, v), free fall between impacts,
/// guard h = y, reset (y, v) -> (y, -e v + u0). The nominal fixed point on
/// the section is (0, -u0 / (1 - e)).
HybridSystemModel bouncing_ball(const BouncingBallParams& p = {});

/// Landing velocity at guard level d starting from the pre-impact state
/// (y_prev, v_minus): -sqrt((-e v + u0)^2 + 2 g (y_prev - d)).
/// Throws NoImpact when the apex stays below d.
double bouncing_ball_analytic_map(const BouncingBallParams& p, double v_minus,
                                  double y_prev, double d);

/// Bouncing ball whose reset is only defined for pre-impact velocities
/// within +-band of the nominal one. Identical local linearization, broken
/// robustness for small bands.
HybridSystemModel fragile_ball(const BouncingBallParams& p, double band);

struct CompassGaitParams {
  double m = 0.0;     // leg mass, kg
  double m_h = 0.0;   // hip mass, kg
  double a = 0.0;     // foot-to-leg-mass distance, m
  double b = 0.0;     // leg-mass-to-hip distance, m
  double length = 0.0;  // leg length a + b, m
  double g = 9.81;
  double slope = 0.0;   // ground inclination, rad

  /// Requires positive masses/lengths, a + b = length to 1e-12, and a
  /// slope in (0, 0.3).
  void validate() const;
};

/// Planar two-link passive walker on a slope. State
/// (q_stance, q_swing, qd_stance, qd_swing), angles from the world
/// vertical, positive toward the downhill direction. Guard h is the
/// swing-foot clearance above the slope line through the stance foot;
/// spurious mid-swing scuffing is masked by a phase gate that arms the
/// guard only once the swing foot is ahead of the stance foot.
HybridSystemModel compass_gait(const CompassGaitParams& p);

/// Plastic impact and leg relabeling applied to a pre-impact state.
Vector compass_impact(const CompassGaitParams& p, const Vector& x_minus);

/// Pinned 2x2 mass matrix at configuration q = (q1, q2).
Matrix compass_mass_matrix(const CompassGaitParams& p, const Vector& q);

/// Coriolis plus gravity bias so that D(q) qdd + bias(q, qd) = 0.
Vector compass_bias(const CompassGaitParams& p, const Vector& q,
                    const Vector& qd);

/// Mechanical energy in the stance-pivot frame (conserved along the flow).
double compass_energy(const CompassGaitParams& p, const Vector& x);

/// Kinetic energy only; strictly dissipated across impacts.
double compass_kinetic_energy(const CompassGaitParams& p, const Vector& x);

/// Free-floating 4x4 mass matrix in (q1, q2, px, py) coordinates used by
/// the impact solve.
Matrix compass_extended_mass(const CompassGaitParams& p, const Vector& q);

/// 2x4 Jacobian of the swing-foot position in extended coordinates.
Matrix compass_swing_jacobian(const CompassGaitParams& p, const Vector& q);

/// Post-impact generalized velocities of a rigid mechanism with inertia D
/// hitting the constraint whose Jacobian is J_h, followed by the coordinate
/// relabeling R:
///   qdot_plus = (R - R D^-1 J_h' (J_h D^-1 J_h')^-1 J_h) qdot_minus.
/// An empty J_h (no constraint rows) degenerates to R qdot_minus. Throws
/// SingularContact when the contact block J_h D^-1 J_h' is singular.
Vector rigid_impact(const Matrix& D, const Matrix& J_h,
                    const Vector& qdot_minus, const Matrix& R);

}  // namespace deltacert
