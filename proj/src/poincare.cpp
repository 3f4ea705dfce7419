#include "deltacert/poincare.hpp"

#include <cmath>

#include "deltacert/log.hpp"
#include "deltacert/rng.hpp"

namespace deltacert {

void DisturbanceSequence::validate() const {
  if (delta < 0.0) throw DegenerateConfig("disturbance bound must be >= 0");
  for (double v : values) {
    if (std::abs(v) > delta) {
      throw DegenerateConfig("disturbance value exceeds declared bound");
    }
  }
}

Vector poincare_extended(const HybridSystemModel& sys, const Vector& x_minus,
                         double d, const IntegratorConfig& cfg) {
  const Vector x_post = apply_reset(sys, x_minus);
  const ImpactFlow impact = flow_to_guard(sys, x_post, d, cfg);
  const double residual = std::abs(sys.guard(impact.state) - d);
  if (residual > cfg.event_tol) {
    throw NoConvergence("guard residual " + std::to_string(residual) +
                        " exceeds event tolerance after refinement");
  }
  return impact.state;
}

RolloutResult rollout(const HybridSystemModel& sys, const Vector& x0,
                      const DisturbanceSequence& ds,
                      const IntegratorConfig& cfg) {
  ds.validate();
  RolloutResult out;
  out.states.reserve(ds.values.size());
  Vector x = x0;
  for (std::size_t k = 0; k < ds.values.size(); ++k) {
    try {
      x = poincare_extended(sys, x, ds.values[k], cfg);
    } catch (const NoImpact&) {
      out.truncated_step = k + 1;
      out.truncation_reason = "NoImpact";
      return out;
    } catch (const GrazingEvent&) {
      out.truncated_step = k + 1;
      out.truncation_reason = "GrazingEvent";
      return out;
    } catch (const ResetDomainError&) {
      out.truncated_step = k + 1;
      out.truncation_reason = "ResetDomainError";
      return out;
    } catch (const IntegrationDiverged&) {
      out.truncated_step = k + 1;
      out.truncation_reason = "IntegrationDiverged";
      return out;
    } catch (const StepUnderflow&) {
      out.truncated_step = k + 1;
      out.truncation_reason = "StepUnderflow";
      return out;
    } catch (const SingularContact&) {
      out.truncated_step = k + 1;
      out.truncation_reason = "SingularContact";
      return out;
    }
    out.states.push_back(x);
  }
  return out;
}

namespace {

Matrix linearize_with_retry(const HybridSystemModel& sys, const Vector& x_star,
                            double fd_step, const IntegratorConfig& cfg) {
  double step = fd_step;
  while (true) {
    try {
      return linearize(sys, x_star, step, cfg);
    } catch (const Error&) {
      if (step / 10.0 < 1e-9) throw;
      step /= 10.0;
      log_info("linearize retry with fd_step = " + std::to_string(step));
    }
  }
}

}  // namespace

Matrix linearize(const HybridSystemModel& sys, const Vector& x_star,
                 double fd_step, const IntegratorConfig& cfg) {
  const int n = static_cast<int>(x_star.size());
  Matrix A(n, n);
  Vector x = x_star;
  for (int i = 0; i < n; ++i) {
    const double h = fd_step * (1.0 + std::abs(x_star[i]));
    x[i] = x_star[i] + h;
    const Vector fp = poincare_extended(sys, x, 0.0, cfg);
    x[i] = x_star[i] - h;
    const Vector fm = poincare_extended(sys, x, 0.0, cfg);
    x[i] = x_star[i];
    A.col(i) = (fp - fm) / (2.0 * h);
  }
  return A;
}

double spectral_radius(const Matrix& A) {
  if (A.rows() != A.cols()) {
    throw DegenerateConfig("spectral radius needs a square matrix");
  }
  if (A.rows() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> solver(A, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw NoConvergence("eigenvalue iteration failed");
  }
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

PeriodicOrbit find_fixed_point(const HybridSystemModel& sys,
                               const Vector& x_guess,
                               const IntegratorConfig& cfg,
                               const FixedPointConfig& fp) {
  cfg.validate();
  if (fp.tol_scale <= 0.0 || fp.max_iterations < 0 || fp.fd_step <= 0.0) {
    throw DegenerateConfig("fixed-point search parameters must be positive");
  }

  // Project the guess onto the nominal section h = 0 along the guard
  // gradient before iterating on the map.
  Vector x = x_guess;
  for (int i = 0; i < 20; ++i) {
    const double hv = sys.guard(x);
    if (std::abs(hv) <= cfg.event_tol) break;
    const Vector grad = guard_gradient_or_fd(sys, x);
    const double g2 = grad.squaredNorm();
    if (g2 <= 0.0) {
      throw SingularJacobian("guard gradient vanishes at the guess");
    }
    x -= grad * (hv / g2);
  }

  const auto residual_of = [&](const Vector& xm) -> Vector {
    return poincare_extended(sys, xm, 0.0, cfg) - xm;
  };

  Vector fx = residual_of(x);
  int iters = 0;
  const Matrix eye = Matrix::Identity(x.size(), x.size());

  while (fx.norm() > fp.tol_scale * (1.0 + x.norm())) {
    if (iters >= fp.max_iterations) {
      throw NoConvergence("fixed-point iteration budget exhausted, residual " +
                          std::to_string(fx.norm()));
    }
    const Matrix J =
        linearize_with_retry(sys, x, fp.fd_step, cfg) - eye;
    Eigen::FullPivLU<Matrix> lu(J);
    if (!lu.isInvertible()) {
      throw SingularJacobian("singular Newton matrix at iteration " +
                             std::to_string(iters));
    }
    const Vector step = lu.solve(-fx);

    double scale = 1.0;
    bool improved = false;
    for (int bt = 0; bt <= fp.max_backtracks; ++bt) {
      try {
        const Vector x_try = x + scale * step;
        const Vector f_try = residual_of(x_try);
        if (f_try.norm() < fx.norm()) {
          x = x_try;
          fx = f_try;
          improved = true;
          break;
        }
      } catch (const Error&) {
        // Out of the map's domain; shorten the step.
      }
      scale *= 0.5;
    }
    if (!improved) {
      throw NoConvergence("damped Newton step failed to reduce the residual");
    }
    ++iters;
  }

  PeriodicOrbit orbit;
  orbit.x_star = x;
  orbit.residual = fx.norm();
  orbit.newton_iterations = iters;
  orbit.period = time_to_impact(sys, apply_reset(sys, x), 0.0, cfg);
  orbit.jacobian = linearize_with_retry(sys, x, fp.fd_step, cfg);
  orbit.spectral_radius = spectral_radius(orbit.jacobian);
  return orbit;
}

double estimate_domain_radius(const HybridSystemModel& sys,
                              const Vector& x_star,
                              const IntegratorConfig& cfg,
                              const DomainProbeConfig& probe) {
  if (probe.r0 <= 0.0 || probe.growth <= 1.0 || probe.samples < 1 ||
      probe.r_max < probe.r0) {
    throw DegenerateConfig("domain probe parameters out of range");
  }
  const int n = static_cast<int>(x_star.size());
  const Vector scale = sys.scale_or_ones();
  double last_ok = 0.0;
  double r = probe.r0;
  for (int ri = 0; r <= probe.r_max; ++ri, r *= probe.growth) {
    for (int j = 0; j < probe.samples; ++j) {
      CounterRng rng(probe.seed, 0x646F6DU, static_cast<std::uint64_t>(ri),
                     static_cast<std::uint64_t>(j));
      const Vector z = sample_sphere(n, r, rng);
      const Vector x = x_star + (scale.array() * z.array()).matrix();
      try {
        poincare_extended(sys, x, 0.0, cfg);
      } catch (const Error&) {
        return last_ok;
      }
    }
    last_ok = r;
  }
  return last_ok;
}

}  // namespace deltacert
