#pragma once

#include <utility>

#include "deltacert/hybrid.hpp"
#include "deltacert/types.hpp"

namespace deltacert {

/// Solves A' P A - P = -Q for symmetric positive definite Q and Schur-stable
/// A by summing the convergent series P = sum_j (A')^j Q A^j (terms grouped
/// by repeated squaring), truncated when the added term drops below
/// 1e-14 * ||P||_F, then polished with one residual correction and
/// symmetrized. The residual ||A'PA - P + Q||_F <= 1e-10 ||Q||_F is checked
/// on every solve.
Matrix solve_discrete_lyapunov(const Matrix& A, const Matrix& Q);

/// Extreme eigenvalues (min, max) of a symmetric matrix. Throws NotSymmetric
/// beyond a 1e-12 relative asymmetry and, when require_pd is set,
/// NotPositiveDefinite for a non-positive spectrum.
std::pair<double, double> symmetric_eig_bounds(const Matrix& P,
                                               bool require_pd = false);

/// Quadratic Lyapunov data for the linearized return map in scaled
/// deviation coordinates z = (x - x_star) / scale:
///   k1 ||z||^c <= V(z) = z' P z <= k2 ||z||^c, decrease rate k3.
struct RobustLyapunovCertificate {
  Matrix P;
  Matrix Q;
  double k1 = 0.0;
  double k2 = 0.0;
  double k3 = 0.0;
  double c = 2.0;
  double chi = 0.0;  // scale factor between disturbance and certified radius
  Vector x_star;
  Vector state_scale;

  /// Equivalent decrease constant: k3 = k4 / 2.
  double k4() const { return 2.0 * k3; }
  /// Equivalent sensitivity constant: chi = (sigma / k4)^(1/c).
  double sigma() const;

  Vector to_scaled(const Vector& x) const;
  double scaled_distance(const Vector& x) const;
};

/// Builds the certificate for the return-map Jacobian A (unscaled
/// coordinates): solves the Lyapunov equation for the scaled Jacobian,
/// bounds the spectrum of P, and sets k3 = k. Throws NotStable,
/// NotPositiveDefinite, or BadConstants (k3 >= k2).
RobustLyapunovCertificate make_lyapunov_certificate(const Matrix& A,
                                                    const Matrix& Q, double k,
                                                    const Vector& x_star,
                                                    const Vector& state_scale);

/// V(x) = z' P z with z the scaled deviation of x from x_star.
double lyap_value(const RobustLyapunovCertificate& cert, const Vector& x);

/// m = -[V(P_d(x)) - V(x)] - k ||z_x||^2; -infinity when the map escapes
/// its domain at (x, d). m >= 0 certifies the decrease condition there.
double decrease_margin(const HybridSystemModel& sys,
                       const RobustLyapunovCertificate& cert, const Vector& x,
                       double d, double k, const IntegratorConfig& cfg);

}  // namespace deltacert
