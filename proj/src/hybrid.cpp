#include "deltacert/hybrid.hpp"

#include <cmath>
#include <limits>

#include "deltacert/dopri5.hpp"
#include "deltacert/log.hpp"

namespace deltacert {

void IntegratorConfig::validate() const {
  const bool positive = rel_tol > 0.0 && abs_tol > 0.0 && max_step > 0.0 &&
                        event_tol > 0.0 && max_horizon > 0.0 &&
                        blowup_norm > 0.0 && grazing_rate_tol > 0.0;
  if (!positive || t_dwell < 0.0) {
    throw DegenerateConfig("integrator tolerances must be positive");
  }
  if (event_tol < abs_tol) {
    throw DegenerateConfig("event_tol must be >= abs_tol");
  }
  if (dense_samples < 2) {
    throw DegenerateConfig("dense_samples must be >= 2");
  }
}

Vector HybridSystemModel::scale_or_ones() const {
  if (state_scale.size() == dim) return state_scale;
  return Vector::Ones(dim);
}

Vector guard_gradient_or_fd(const HybridSystemModel& sys, const Vector& x) {
  if (sys.guard_gradient) return sys.guard_gradient(x);
  const double step = 1e-6 * (1.0 + x.norm());
  Vector grad(x.size());
  Vector xp = x;
  for (int i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + step;
    const double hp = sys.guard(xp);
    xp[i] = x[i] - step;
    const double hm = sys.guard(xp);
    xp[i] = x[i];
    grad[i] = (hp - hm) / (2.0 * step);
  }
  return grad;
}

double guard_rate(const HybridSystemModel& sys, const Vector& x) {
  return guard_gradient_or_fd(sys, x).dot(sys.vector_field(x));
}

Vector apply_reset(const HybridSystemModel& sys, const Vector& x_minus) {
  return sys.reset(x_minus);
}

Trajectory flow(const HybridSystemModel& sys, const Vector& x0, double t_end,
                const IntegratorConfig& cfg) {
  Trajectory traj;
  traj.times.push_back(0.0);
  traj.states.push_back(x0);
  if (t_end == 0.0) return traj;
  integrate_dopri5(
      sys.vector_field, x0, t_end, cfg,
      [&](const DenseSegment& seg, const Vector& y1) {
        traj.times.push_back(seg.t1);
        traj.states.push_back(y1);
        return StepAction::kContinue;
      });
  return traj;
}

namespace {

/// Brent root refinement of g on [ta, tb] with g(ta) > 0 >= g(tb).
/// Stops once |g| <= tol or the bracket collapses to machine width.
double refine_crossing(const std::function<double(double)>& g, double ta,
                       double ga, double tb, double gb, double tol) {
  double a = ta, b = tb, fa = ga, fb = gb;
  double c = a, fc = fa;
  double d_step = b - a, e_step = d_step;
  const double eps = std::numeric_limits<double>::epsilon();

  for (int iter = 0; iter < 200; ++iter) {
    if (std::abs(fc) < std::abs(fb)) {
      a = b; b = c; c = a;
      fa = fb; fb = fc; fc = fa;
    }
    const double tol1 = 2.0 * eps * std::abs(b) + 0.5 * 1e-16;
    const double xm = 0.5 * (c - b);
    if (std::abs(fb) <= tol || std::abs(xm) <= tol1) return b;

    if (std::abs(e_step) >= tol1 && std::abs(fa) > std::abs(fb)) {
      const double s = fb / fa;
      double p, q;
      if (a == c) {
        p = 2.0 * xm * s;
        q = 1.0 - s;
      } else {
        const double qq = fa / fc;
        const double r = fb / fc;
        p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
        q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q;
      p = std::abs(p);
      if (2.0 * p < std::min(3.0 * xm * q - std::abs(tol1 * q),
                             std::abs(e_step * q))) {
        e_step = d_step;
        d_step = p / q;
      } else {
        d_step = xm;
        e_step = d_step;
      }
    } else {
      d_step = xm;
      e_step = d_step;
    }
    a = b;
    fa = fb;
    b += (std::abs(d_step) > tol1) ? d_step
                                   : (xm > 0.0 ? tol1 : -tol1);
    fb = g(b);
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a;
      fc = fa;
      d_step = b - a;
      e_step = d_step;
    }
  }
  return b;
}

}  // namespace

ImpactFlow flow_to_guard(const HybridSystemModel& sys, const Vector& x_post,
                         double d, const IntegratorConfig& cfg) {
  cfg.validate();
  if (d < sys.guard_min || d > sys.guard_max) {
    throw DegenerateConfig("guard level outside the model's declared interval");
  }

  const auto armed = [&](const Vector& x) {
    return !sys.guard_armed || sys.guard_armed(x);
  };

  ImpactFlow out;
  out.trajectory.times.push_back(0.0);
  out.trajectory.states.push_back(x_post);

  const double g0 = sys.guard(x_post) - d;
  if (cfg.t_dwell == 0.0 && std::abs(g0) <= cfg.event_tol && armed(x_post)) {
    const double rate = guard_rate(sys, x_post);
    if (rate < 0.0) {
      if (std::abs(rate) < cfg.grazing_rate_tol) {
        throw GrazingEvent("guard rate below transversality threshold at t=0");
      }
      out.time = 0.0;
      out.state = x_post;
      out.trajectory.event = GuardCrossing{d, 0.0};
      return out;
    }
  }

  bool found = false;
  double t_event = 0.0;
  Vector x_event;
  double carry_g = g0;

  integrate_dopri5(
      sys.vector_field, x_post, cfg.max_horizon, cfg,
      [&](const DenseSegment& seg, const Vector& y1) {
        const int m = cfg.dense_samples;
        const double span = seg.t1 - seg.t0;
        double prev_t = seg.t0;
        double prev_g = carry_g;
        for (int j = 1; j <= m; ++j) {
          const double tj = (j == m) ? seg.t1 : seg.t0 + span * j / m;
          const Vector xj = (j == m) ? y1 : seg.eval(tj);
          const double gj = sys.guard(xj) - d;
          if (prev_g > 0.0 && gj <= 0.0) {
            const auto g_of_t = [&](double t) {
              return sys.guard(seg.eval(t)) - d;
            };
            const double tr =
                refine_crossing(g_of_t, prev_t, prev_g, tj, gj, cfg.event_tol);
            const Vector xr = seg.eval(tr);
            if (tr >= cfg.t_dwell && armed(xr)) {
              const double rate = guard_rate(sys, xr);
              if (rate < 0.0 && std::abs(rate) < cfg.grazing_rate_tol) {
                throw GrazingEvent("guard rate " + std::to_string(rate) +
                                   " below transversality threshold");
              }
              if (rate < 0.0) {
                found = true;
                t_event = tr;
                x_event = xr;
                return StepAction::kStop;
              }
              log_debug("discarding non-descending crossing at t = " +
                        std::to_string(tr));
            }
          }
          prev_t = tj;
          prev_g = gj;
        }
        carry_g = prev_g;
        out.trajectory.times.push_back(seg.t1);
        out.trajectory.states.push_back(y1);
        return StepAction::kContinue;
      });

  if (!found) {
    throw NoImpact("no descending guard crossing within horizon " +
                   std::to_string(cfg.max_horizon));
  }

  out.time = t_event;
  out.state = x_event;
  out.trajectory.times.push_back(t_event);
  out.trajectory.states.push_back(x_event);
  out.trajectory.event = GuardCrossing{d, t_event};
  return out;
}

double time_to_impact(const HybridSystemModel& sys, const Vector& x_post,
                      double d, const IntegratorConfig& cfg) {
  return flow_to_guard(sys, x_post, d, cfg).time;
}

}  // namespace deltacert
