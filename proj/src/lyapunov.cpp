#include "deltacert/lyapunov.hpp"

#include <cmath>
#include <limits>

#include "deltacert/poincare.hpp"

namespace deltacert {
namespace {

void check_symmetric(const Matrix& M, const char* what) {
  const double asym = (M - M.transpose()).cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  if (asym > 1e-12 * scale) {
    throw NotSymmetric(std::string(what) + " is not symmetric");
  }
}

/// Sum of the series sum_j (A')^j Q A^j with terms grouped by repeated
/// squaring of A; the grouped term is dropped once it falls below
/// 1e-14 * ||partial sum||_F.
Matrix series_sum(const Matrix& A, const Matrix& Q) {
  Matrix P = Q;
  if (Q.norm() == 0.0) return P;
  Matrix Ak = A;
  for (int it = 0; it < 200; ++it) {
    const Matrix term = Ak.transpose() * P * Ak;
    if (!term.allFinite()) {
      throw NoConvergence("series term overflowed during Lyapunov solve");
    }
    P += term;
    if (term.norm() <= 1e-14 * P.norm()) return P;
    Ak = Ak * Ak;
  }
  throw NoConvergence("Lyapunov series did not settle");
}

}  // namespace

Matrix solve_discrete_lyapunov(const Matrix& A, const Matrix& Q) {
  if (A.rows() != A.cols() || Q.rows() != Q.cols() || A.rows() != Q.rows()) {
    throw DegenerateConfig("Lyapunov solve needs square A and Q of equal size");
  }
  check_symmetric(Q, "Q");
  const double rho = spectral_radius(A);
  if (rho >= 1.0) {
    throw NotStable("spectral radius " + std::to_string(rho) +
                    " is not < 1");
  }

  Matrix P = series_sum(A, Q);

  // One residual-correction pass; the correction solves the same equation
  // with the residual as right-hand side.
  const Matrix R = A.transpose() * P * A - P + Q;
  P += series_sum(A, 0.5 * (R + R.transpose()));
  P = 0.5 * (P + P.transpose());

  const double residual = (A.transpose() * P * A - P + Q).norm();
  if (residual > 1e-10 * Q.norm()) {
    throw NoConvergence("Lyapunov residual " + std::to_string(residual) +
                        " above tolerance");
  }
  return P;
}

std::pair<double, double> symmetric_eig_bounds(const Matrix& P,
                                               bool require_pd) {
  if (P.rows() != P.cols()) {
    throw DegenerateConfig("eigenvalue bounds need a square matrix");
  }
  check_symmetric(P, "P");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(P,
                                               Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NoConvergence("symmetric eigenvalue iteration failed");
  }
  const double lo = solver.eigenvalues().minCoeff();
  const double hi = solver.eigenvalues().maxCoeff();
  if (require_pd && lo <= 0.0) {
    throw NotPositiveDefinite("matrix has a non-positive eigenvalue");
  }
  return {lo, hi};
}

double RobustLyapunovCertificate::sigma() const {
  return k4() * std::pow(chi, c);
}

Vector RobustLyapunovCertificate::to_scaled(const Vector& x) const {
  return ((x - x_star).array() / state_scale.array()).matrix();
}

double RobustLyapunovCertificate::scaled_distance(const Vector& x) const {
  return to_scaled(x).norm();
}

RobustLyapunovCertificate make_lyapunov_certificate(const Matrix& A,
                                                    const Matrix& Q, double k,
                                                    const Vector& x_star,
                                                    const Vector& state_scale) {
  if (state_scale.size() != A.rows() || x_star.size() != A.rows()) {
    throw DegenerateConfig("certificate dimensions disagree");
  }
  if ((state_scale.array() <= 0.0).any()) {
    throw DegenerateConfig("state scales must be positive");
  }
  const Matrix s_inv = state_scale.cwiseInverse().asDiagonal();
  const Matrix s = state_scale.asDiagonal();
  const Matrix a_scaled = s_inv * A * s;

  RobustLyapunovCertificate cert;
  cert.P = solve_discrete_lyapunov(a_scaled, Q);
  cert.Q = Q;
  std::tie(cert.k1, cert.k2) =
      symmetric_eig_bounds(cert.P, /*require_pd=*/true);
  cert.k3 = k;
  cert.c = 2.0;
  cert.x_star = x_star;
  cert.state_scale = state_scale;
  if (!(k > 0.0) || k >= cert.k2) {
    throw BadConstants("decrease rate k must satisfy 0 < k < lambda_max(P)");
  }
  return cert;
}

double lyap_value(const RobustLyapunovCertificate& cert, const Vector& x) {
  const Vector z = cert.to_scaled(x);
  return z.dot(cert.P * z);
}

double decrease_margin(const HybridSystemModel& sys,
                       const RobustLyapunovCertificate& cert, const Vector& x,
                       double d, double k, const IntegratorConfig& cfg) {
  Vector y;
  try {
    y = poincare_extended(sys, x, d, cfg);
  } catch (const NoImpact&) {
    return -std::numeric_limits<double>::infinity();
  } catch (const GrazingEvent&) {
    return -std::numeric_limits<double>::infinity();
  } catch (const ResetDomainError&) {
    return -std::numeric_limits<double>::infinity();
  } catch (const IntegrationDiverged&) {
    return -std::numeric_limits<double>::infinity();
  } catch (const StepUnderflow&) {
    return -std::numeric_limits<double>::infinity();
  } catch (const SingularContact&) {
    return -std::numeric_limits<double>::infinity();
  }
  const Vector zx = cert.to_scaled(x);
  const Vector zy = cert.to_scaled(y);
  const double vx = zx.dot(cert.P * zx);
  const double vy = zy.dot(cert.P * zy);
  return -(vy - vx) - k * zx.squaredNorm();
}

}  // namespace deltacert
