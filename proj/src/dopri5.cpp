#include "deltacert/dopri5.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "deltacert/errors.hpp"

namespace deltacert {
namespace {

// Dormand-Prince 5(4) tableau.
constexpr double kC2 = 1.0 / 5.0, kC3 = 3.0 / 10.0, kC4 = 4.0 / 5.0,
                 kC5 = 8.0 / 9.0;
constexpr double kA21 = 1.0 / 5.0;
constexpr double kA31 = 3.0 / 40.0, kA32 = 9.0 / 40.0;
constexpr double kA41 = 44.0 / 45.0, kA42 = -56.0 / 15.0, kA43 = 32.0 / 9.0;
constexpr double kA51 = 19372.0 / 6561.0, kA52 = -25360.0 / 2187.0,
                 kA53 = 64448.0 / 6561.0, kA54 = -212.0 / 729.0;
constexpr double kA61 = 9017.0 / 3168.0, kA62 = -355.0 / 33.0,
                 kA63 = 46732.0 / 5247.0, kA64 = 49.0 / 176.0,
                 kA65 = -5103.0 / 18656.0;
constexpr double kA71 = 35.0 / 384.0, kA73 = 500.0 / 1113.0,
                 kA74 = 125.0 / 192.0, kA75 = -2187.0 / 6784.0,
                 kA76 = 11.0 / 84.0;
// Difference between the 5th and 4th order weights.
constexpr double kE1 = 71.0 / 57600.0, kE3 = -71.0 / 16695.0,
                 kE4 = 71.0 / 1920.0, kE5 = -17253.0 / 339200.0,
                 kE6 = 22.0 / 525.0, kE7 = -1.0 / 40.0;
// Dense-output weights for the fourth-order interpolant.
constexpr double kD1 = -12715105075.0 / 11282082432.0,
                 kD3 = 87487479700.0 / 32700410799.0,
                 kD4 = -10690763975.0 / 1880347072.0,
                 kD5 = 701980252875.0 / 199316789632.0,
                 kD6 = -1453857185.0 / 822651844.0,
                 kD7 = 69997945.0 / 29380423.0;

double initial_step(const std::function<Vector(const Vector&)>& f,
                    const Vector& y0, const Vector& f0, double t_end,
                    const IntegratorConfig& cfg) {
  const int n = static_cast<int>(y0.size());
  Vector sc(n);
  for (int i = 0; i < n; ++i) {
    sc[i] = cfg.abs_tol + cfg.rel_tol * std::abs(y0[i]);
  }
  const double d0 = (y0.array() / sc.array()).matrix().norm();
  const double d1 = (f0.array() / sc.array()).matrix().norm();
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h0 = std::min(h0, cfg.max_step);
  h0 = std::min(h0, t_end);

  const Vector y1 = y0 + h0 * f0;
  const Vector f1 = f(y1);
  const double d2 = ((f1 - f0).array() / sc.array()).matrix().norm() / h0;
  const double dm = std::max(d1, d2);
  double h1 = (dm <= 1e-15) ? std::max(1e-6, h0 * 1e-3)
                            : std::pow(0.01 / dm, 0.2);
  return std::min({100.0 * h0, h1, cfg.max_step, t_end});
}

}  // namespace

Vector DenseSegment::eval(double t) const {
  const double h = t1 - t0;
  const double theta = (h == 0.0) ? 0.0 : (t - t0) / h;
  const double theta1 = 1.0 - theta;
  return coeff.col(0) +
         theta * (coeff.col(1) +
                  theta1 * (coeff.col(2) +
                            theta * (coeff.col(3) + theta1 * coeff.col(4))));
}

void integrate_dopri5(const std::function<Vector(const Vector&)>& f,
                      const Vector& y0, double t_end,
                      const IntegratorConfig& cfg,
                      const StepCallback& on_step) {
  cfg.validate();
  if (t_end < 0.0) throw DegenerateConfig("integration horizon must be >= 0");
  if (y0.norm() > cfg.blowup_norm) {
    throw IntegrationDiverged("initial state beyond blow-up bound");
  }
  if (t_end == 0.0) return;

  const int n = static_cast<int>(y0.size());
  double t = 0.0;
  Vector y = y0;
  Vector k1 = f(y);
  Vector k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), y1(n), err(n);
  double h = initial_step(f, y, k1, t_end, cfg);
  bool rejected = false;
  DenseSegment seg;
  seg.coeff.resize(n, 5);

  while (t < t_end) {
    const double h_floor =
        16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t));
    if (h < h_floor) {
      throw StepUnderflow("step size underflow at t = " + std::to_string(t));
    }
    if (t + h > t_end) h = t_end - t;

    k2 = f(y + h * (kA21 * k1));
    k3 = f(y + h * (kA31 * k1 + kA32 * k2));
    k4 = f(y + h * (kA41 * k1 + kA42 * k2 + kA43 * k3));
    k5 = f(y + h * (kA51 * k1 + kA52 * k2 + kA53 * k3 + kA54 * k4));
    k6 = f(y + h * (kA61 * k1 + kA62 * k2 + kA63 * k3 + kA64 * k4 + kA65 * k5));
    y1 = y + h * (kA71 * k1 + kA73 * k3 + kA74 * k4 + kA75 * k5 + kA76 * k6);
    k7 = f(y1);

    err = h * (kE1 * k1 + kE3 * k3 + kE4 * k4 + kE5 * k5 + kE6 * k6 + kE7 * k7);
    double err_norm = 0.0;
    for (int i = 0; i < n; ++i) {
      const double sc =
          cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y[i]), std::abs(y1[i]));
      const double r = err[i] / sc;
      err_norm += r * r;
    }
    err_norm = std::sqrt(err_norm / n);

    if (!std::isfinite(err_norm) || !y1.allFinite()) {
      h *= 0.5;
      rejected = true;
      continue;
    }

    if (err_norm <= 1.0) {
      if (y1.norm() > cfg.blowup_norm) {
        throw IntegrationDiverged("state norm exceeded blow-up bound at t = " +
                                  std::to_string(t + h));
      }
      seg.t0 = t;
      seg.t1 = t + h;
      const Vector ydiff = y1 - y;
      const Vector bspl = h * k1 - ydiff;
      seg.coeff.col(0) = y;
      seg.coeff.col(1) = ydiff;
      seg.coeff.col(2) = bspl;
      seg.coeff.col(3) = ydiff - h * k7 - bspl;
      seg.coeff.col(4) =
          h * (kD1 * k1 + kD3 * k3 + kD4 * k4 + kD5 * k5 + kD6 * k6 + kD7 * k7);

      t += h;
      y = y1;
      k1 = k7;  // first-same-as-last

      if (on_step(seg, y) == StepAction::kStop) return;

      double fac = 0.9 * std::pow(std::max(err_norm, 1e-16), -0.2);
      fac = std::clamp(fac, 0.2, rejected ? 1.0 : 10.0);
      h = std::min(h * fac, cfg.max_step);
      rejected = false;
    } else {
      const double fac = std::max(0.2, 0.9 * std::pow(err_norm, -0.2));
      h *= std::min(fac, 1.0);
      rejected = true;
    }
  }
}

}  // namespace deltacert
