#pragma once

#include <functional>

#include "deltacert/hybrid.hpp"
#include "deltacert/types.hpp"

namespace deltacert {

/// One accepted Dormand-Prince 5(4) step with its fourth-order dense-output
/// polynomial. eval() interpolates anywhere inside [t0, t1].
struct DenseSegment {
  double t0 = 0.0;
  double t1 = 0.0;
  Matrix coeff;  // n x 5 interpolation coefficients

  Vector eval(double t) const;
};

enum class StepAction { kContinue, kStop };

/// Called after every accepted step with the dense segment and the step-end
/// state. Returning kStop ends the integration.
using StepCallback =
    std::function<StepAction(const DenseSegment& seg, const Vector& y1)>;

/// Adaptive DP5(4) driver over [0, t_end]. Error control uses
/// sc_i = abs_tol + rel_tol * max(|y0_i|, |y1_i|). Throws
/// IntegrationDiverged past cfg.blowup_norm and StepUnderflow when the
/// step size collapses.
void integrate_dopri5(const std::function<Vector(const Vector&)>& f,
                      const Vector& y0, double t_end,
                      const IntegratorConfig& cfg, const StepCallback& on_step);

}  // namespace deltacert
