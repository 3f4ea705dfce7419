#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "deltacert/errors.hpp"
#include "deltacert/hybrid.hpp"
#include "deltacert/models.hpp"
#include "deltacert/rng.hpp"

using namespace deltacert;

namespace {

HybridSystemModel ball() { return bouncing_ball(BouncingBallParams{}); }

HybridSystemModel scalar_model(std::function<Vector(const Vector&)> f) {
  HybridSystemModel sys;
  sys.dim = 1;
  sys.name = "scalar";
  sys.vector_field = std::move(f);
  sys.guard = [](const Vector& x) { return x(0); };
  sys.reset = [](const Vector& x) { return x; };
  return sys;
}

}  // namespace

TEST_CASE("config validation rejects non-positive tolerances") {
  IntegratorConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.rel_tol = 0.0;
  CHECK_THROWS_AS(cfg.validate(), DegenerateConfig);
  cfg = IntegratorConfig{};
  cfg.event_tol = 1e-14;  // below abs_tol
  CHECK_THROWS_AS(cfg.validate(), DegenerateConfig);
}

TEST_CASE("ballistic flight matches the closed form") {
  IntegratorConfig cfg;
  const Vector x0{{0.0, 5.0}};
  Trajectory tr = flow(ball(), x0, 0.2, cfg);
  const Vector& xf = tr.states.back();
  // y = 5 t - g/2 t^2, v = 5 - g t at t = 0.2
  CHECK(xf(0) == doctest::Approx(0.8038).epsilon(1e-10));
  CHECK(xf(1) == doctest::Approx(3.038).epsilon(1e-10));
  CHECK(tr.times.back() == doctest::Approx(0.2).epsilon(1e-14));
}

TEST_CASE("harmonic oscillator stays on the unit circle") {
  HybridSystemModel sys;
  sys.dim = 2;
  sys.name = "oscillator";
  sys.vector_field = [](const Vector& x) { return Vector{{x(1), -x(0)}}; };
  sys.guard = [](const Vector& x) { return x(0); };
  sys.reset = [](const Vector& x) { return x; };
  IntegratorConfig cfg;
  Trajectory tr = flow(sys, Vector{{1.0, 0.0}}, 1.3, cfg);
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    const double t = tr.times[i];
    CHECK(tr.states[i](0) == doctest::Approx(std::cos(t)).epsilon(1e-9));
    CHECK(tr.states[i](1) == doctest::Approx(-std::sin(t)).epsilon(1e-9));
  }
}

TEST_CASE("quadratic growth trips the blow-up bound") {
  auto sys = scalar_model([](const Vector& x) {
    return Vector{{x(0) * x(0)}};
  });
  IntegratorConfig cfg;
  CHECK_THROWS_AS(flow(sys, Vector{{1.0}}, 2.0, cfg), IntegrationDiverged);
}

TEST_CASE("finite-time singularity collapses the step size") {
  // x' = -1/(2x) drives x = sqrt(1 - t) into the origin at t = 1.
  auto sys = scalar_model([](const Vector& x) {
    return Vector{{-0.5 / x(0)}};
  });
  IntegratorConfig cfg;
  CHECK_THROWS_AS(flow(sys, Vector{{1.0}}, 2.0, cfg), StepUnderflow);
}

TEST_CASE("descending crossing time and state match the parabola") {
  IntegratorConfig cfg;
  const double g = 9.81;
  const double u = 4.0;
  SUBCASE("level zero") {
    const double t = time_to_impact(ball(), Vector{{0.0, u}}, 0.0, cfg);
    CHECK(t == doctest::Approx(2.0 * u / g).epsilon(1e-10));
    ImpactFlow impact = flow_to_guard(ball(), Vector{{0.0, u}}, 0.0, cfg);
    CHECK(std::abs(impact.state(0)) <= 1e-9);
    CHECK(impact.state(1) == doctest::Approx(-u).epsilon(1e-9));
    REQUIRE(impact.trajectory.event.has_value());
    CHECK(impact.trajectory.event->level == 0.0);
    CHECK(impact.trajectory.event->time == doctest::Approx(t));
  }
  SUBCASE("raised level") {
    const double d = 0.1;
    const double root = std::sqrt(u * u - 2.0 * g * d);
    const double t = time_to_impact(ball(), Vector{{0.0, u}}, d, cfg);
    CHECK(t == doctest::Approx((u + root) / g).epsilon(1e-10));
    ImpactFlow impact = flow_to_guard(ball(), Vector{{0.0, u}}, d, cfg);
    CHECK(impact.state(0) == doctest::Approx(d).epsilon(1e-9));
    CHECK(impact.state(1) == doctest::Approx(-root).epsilon(1e-9));
  }
}

TEST_CASE("ascending pass through the level is not an impact") {
  IntegratorConfig cfg;
  // From (0.2, 3) the ball rises through 0.25 before falling back.
  const double d = 0.25;
  const double t = time_to_impact(ball(), Vector{{0.2, 3.0}}, d, cfg);
  const double disc = std::sqrt(9.0 - 4.0 * 4.905 * 0.05);
  const double t_desc = (3.0 + disc) / 9.81;
  CHECK(t == doctest::Approx(t_desc).epsilon(1e-10));
}

TEST_CASE("apex below the level means no impact") {
  IntegratorConfig cfg;
  // From (0, 1) the apex is 1/(2g) = 0.051; no descending crossing of 0.1.
  cfg.max_horizon = 2.0;
  CHECK_THROWS_AS(time_to_impact(ball(), Vector{{0.0, 1.0}}, 0.1, cfg),
                  NoImpact);
}

TEST_CASE("near-tangent crossing is flagged as grazing") {
  IntegratorConfig cfg;
  cfg.max_step = 0.01;
  cfg.grazing_rate_tol = 0.1;
  // Level chosen so the crossing rate is 0.05, below the configured tol.
  const double rate = 0.05;
  const double d = (1.0 - rate * rate) / (2.0 * 9.81);
  CHECK_THROWS_AS(time_to_impact(ball(), Vector{{0.0, 1.0}}, d, cfg),
                  GrazingEvent);
}

TEST_CASE("guard rate uses the analytic gradient when declared") {
  const Vector x{{0.3, -2.0}};
  // For the ball h = y, so dh/dt = v.
  CHECK(guard_rate(ball(), x) == doctest::Approx(-2.0).epsilon(1e-12));
  HybridSystemModel no_grad = ball();
  no_grad.guard_gradient = nullptr;
  CHECK(guard_rate(no_grad, x) == doctest::Approx(-2.0).epsilon(1e-6));
}

TEST_CASE("counter rng streams are reproducible and independent") {
  CounterRng a(7, 1, 2), b(7, 1, 2), c(7, 1, 3);
  bool all_equal = true;
  bool any_differs = false;
  for (int i = 0; i < 16; ++i) {
    const std::uint64_t va = a.next_u64();
    all_equal = all_equal && (va == b.next_u64());
    any_differs = any_differs || (va != c.next_u64());
  }
  CHECK(all_equal);
  CHECK(any_differs);
}

TEST_CASE("uniform01 stays in the half-open unit interval") {
  CounterRng rng(123);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("sphere samples sit exactly on the sphere") {
  CounterRng rng(5);
  for (int i = 0; i < 100; ++i) {
    const Vector v = sample_sphere(3, 2.5, rng);
    CHECK(v.norm() == doctest::Approx(2.5).epsilon(1e-12));
  }
  CHECK(sample_sphere(4, 0.0, rng).norm() == 0.0);
}

TEST_CASE("one-dimensional sphere degenerates to both signs") {
  CounterRng rng(11);
  std::set<int> signs;
  for (int i = 0; i < 64; ++i) {
    const Vector v = sample_sphere(1, 1.5, rng);
    CHECK(std::abs(v(0)) == doctest::Approx(1.5).epsilon(1e-12));
    signs.insert(v(0) > 0.0 ? 1 : -1);
  }
  CHECK(signs.size() == 2);
}

TEST_CASE("ball samples are uniform in the ball") {
  CounterRng rng(42);
  const int n_samples = 100000;
  Vector mean = Vector::Zero(2);
  std::vector<double> radial(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    const Vector v = sample_ball(2, 1.0, rng);
    REQUIRE(v.norm() <= 1.0 + 1e-12);
    mean += v;
    // r^2 of a uniform disk sample is itself uniform on [0, 1]
    radial[i] = v.squaredNorm();
  }
  mean /= n_samples;
  // per-coordinate variance of the unit disk is 1/4
  CHECK(std::abs(mean(0)) <= 4.0 * 0.5 / std::sqrt(double(n_samples)));
  CHECK(std::abs(mean(1)) <= 4.0 * 0.5 / std::sqrt(double(n_samples)));

  std::sort(radial.begin(), radial.end());
  double ks = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    const double f = radial[i];
    ks = std::max(ks, std::abs(f - double(i + 1) / n_samples));
    ks = std::max(ks, std::abs(f - double(i) / n_samples));
  }
  // 1% critical value of the one-sample KS statistic
  CHECK(ks <= 1.63 / std::sqrt(double(n_samples)));
}
