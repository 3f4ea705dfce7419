#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "deltacert/certify.hpp"
#include "deltacert/io.hpp"
#include "deltacert/models.hpp"
#include "deltacert/poincare.hpp"
#include "deltacert/rng.hpp"

using namespace deltacert;

namespace {

struct BallSetup {
  HybridSystemModel sys;
  IntegratorConfig cfg;
  PeriodicOrbit orbit;

  BallSetup() : sys(bouncing_ball(BouncingBallParams{})) {
    cfg.max_horizon = 3.0;
    orbit = find_fixed_point(sys, Vector{{0.0, -4.0}}, cfg);
  }
};

CertifyConfig quick_certify() {
  CertifyConfig cc;
  cc.delta_cap = 0.02;
  cc.threads = 8;
  cc.seed = 0;
  return cc;
}

DeltaRobustnessCertificate ball_certificate(const BallSetup& s) {
  return test_delta(s.sys, s.orbit, quick_certify(), s.cfg);
}

}  // namespace

TEST_CASE("constants for the scalar certificate are exact") {
  const double p = 1.0 / 0.36;  // 2.77778: scalar sublevel bound
  const TheoremConstants tc =
      theorem_constants(p, p, 1.0, 2.0, 3.0, 0.01, 1.0);
  CHECK(std::abs(tc.M - 1.0) <= 1e-12);
  CHECK(std::abs(tc.alpha - 0.8) <= 1e-12);
  CHECK(std::abs(tc.gamma - 3.0) <= 1e-12);
  CHECK(std::abs(tc.r_delta - p * 9e-4) <= 1e-12);
  CHECK(std::abs(tc.delta_max - 1.0 / 3.0) <= 1e-12);
  CHECK(std::abs(tc.r1 - 0.03) <= 1e-12);
  CHECK(std::abs(tc.r2 - 0.03) <= 1e-12);
}

TEST_CASE("constants reject broken hypotheses") {
  const double p = 1.0 / 0.36;
  // disturbance bound at/above its admissible ceiling
  CHECK_THROWS_AS(theorem_constants(p, p, 1.0, 2.0, 3.0, 1.0 / 3.0, 1.0),
                  HypothesisViolated);
  // decrease rate >= upper sublevel bound
  CHECK_THROWS_AS(theorem_constants(1.0, 2.0, 2.0, 2.0, 1.0, 0.01, 1.0),
                  BadConstants);
  CHECK_THROWS_AS(theorem_constants(-1.0, 2.0, 1.0, 2.0, 1.0, 0.01, 1.0),
                  BadConstants);
  CHECK_THROWS_AS(theorem_constants(3.0, 2.0, 1.0, 2.0, 1.0, 0.01, 1.0),
                  BadConstants);
}

TEST_CASE("ball search lands on the regression certificate") {
  BallSetup s;
  const DeltaRobustnessCertificate cert = ball_certificate(s);
  REQUIRE(cert.certified);
  CHECK(cert.delta_star == doctest::Approx(0.006).epsilon(1e-12));
  CHECK(cert.chi_star == doctest::Approx(11.0).epsilon(1e-12));
  CHECK(cert.lyap.chi == cert.chi_star);
  CHECK(cert.constants.delta_max > cert.delta_star);
  CHECK(cert.rho_estimate > 0.5);
  CHECK_FALSE(cert.trials.empty());

  // the stored constants are exactly the theorem constants of the pair
  const TheoremConstants tc = theorem_constants(
      cert.lyap.k1, cert.lyap.k2, cert.lyap.k3, cert.lyap.c, cert.chi_star,
      cert.delta_star, cert.rho_estimate);
  CHECK(tc.M == cert.constants.M);
  CHECK(tc.alpha == cert.constants.alpha);
  CHECK(tc.gamma == cert.constants.gamma);
  CHECK(tc.r_delta == cert.constants.r_delta);
}

TEST_CASE("exhausted escalation budget yields a vacuous certificate") {
  BallSetup s;
  CertifyConfig cc = quick_certify();
  cc.chi_max = 0.0;
  const DeltaRobustnessCertificate cert = test_delta(s.sys, s.orbit, cc, s.cfg);
  CHECK_FALSE(cert.certified);
  CHECK(cert.delta_star == 0.0);
  CHECK_THROWS_AS(audit_certificate(s.sys, cert, 10, s.cfg, 8), BadConstants);
}

TEST_CASE("fresh audits pass at the certified pair and at half of it") {
  BallSetup s;
  const DeltaRobustnessCertificate cert = ball_certificate(s);
  CHECK(audit_certificate(s.sys, cert, 2, s.cfg, 8) >= 0.0);

  // halving the disturbance bound keeps the sampled condition satisfied
  DeltaRobustnessCertificate half = cert;
  half.delta_star *= 0.5;
  CHECK(audit_certificate(s.sys, half, 2, s.cfg, 8) >= 0.0);
}

TEST_CASE("identical linearizations decouple from robustness") {
  BallSetup s;
  HybridSystemModel frag = fragile_ball(BouncingBallParams{}, 1e-3);
  PeriodicOrbit frag_orbit = find_fixed_point(frag, Vector{{0.0, -5.0}}, s.cfg);
  CHECK(frag_orbit.spectral_radius ==
        doctest::Approx(s.orbit.spectral_radius).epsilon(1e-6));
  CHECK((frag_orbit.jacobian - s.orbit.jacobian).norm() <= 1e-5);

  CertifyConfig cc = quick_certify();
  cc.chi_max = 6.0;  // every trial dies to reset escapes; cap the escalation
  const DeltaRobustnessCertificate cert = test_delta(frag, frag_orbit, cc, s.cfg);
  CHECK_FALSE(cert.certified);
  CHECK(cert.delta_star == 0.0);
}

TEST_CASE("disturbance bound holds along sampled rollouts") {
  BallSetup s;
  const DeltaRobustnessCertificate cert = ball_certificate(s);
  IssCheckConfig icfg;
  icfg.num_rollouts = 50;
  icfg.steps = 20;
  icfg.threads = 8;
  const IssReport rep = verify_iss_bound(s.sys, cert, icfg, s.cfg);
  CHECK(rep.violations == 0);
  CHECK(rep.truncations == 0);
  CHECK(rep.worst_slack >= 0.0);
  // One row per rollout for the initial state plus one per step.
  CHECK(rep.rows.size() == 50u * 21u);
  CHECK(rep.delta == cert.delta_star);

  icfg.init_dist = "fixed_point";
  icfg.num_rollouts = 5;
  const IssReport fixed = verify_iss_bound(s.sys, cert, icfg, s.cfg);
  CHECK(fixed.violations == 0);
  for (const IssRow& row : fixed.rows) {
    CHECK(row.bound >= cert.constants.gamma * cert.delta_star - 1e-15);
  }
}

TEST_CASE("forcing a larger disturbance on the fragile model truncates") {
  BallSetup s;
  const DeltaRobustnessCertificate cert = ball_certificate(s);
  HybridSystemModel frag = fragile_ball(BouncingBallParams{}, 1e-3);
  IssCheckConfig icfg;
  icfg.num_rollouts = 20;
  icfg.steps = 10;
  icfg.threads = 8;
  const IssReport rep = verify_iss_bound(frag, cert, icfg, s.cfg, 1.5e-2);
  CHECK(rep.delta == 1.5e-2);
  CHECK(rep.truncations > 0);
}

TEST_CASE("boundary of the certified region maps into it") {
  BallSetup s;
  const DeltaRobustnessCertificate cert = ball_certificate(s);
  InvarianceConfig icfg;
  icfg.threads = 8;
  const InvarianceReport rep = check_invariance(s.sys, cert, icfg, s.cfg);
  CHECK(rep.pass);
  CHECK(rep.worst_excess <= 0.0);
}

TEST_CASE("inflating the region is caught by the invariance check") {
  BallSetup s;
  const DeltaRobustnessCertificate cert = ball_certificate(s);
  DeltaRobustnessCertificate inflated = cert;
  inflated.constants.r_delta *= 10.0;
  HybridSystemModel frag = fragile_ball(BouncingBallParams{}, 1e-3);
  InvarianceConfig icfg;
  icfg.threads = 8;
  const InvarianceReport rep = check_invariance(frag, inflated, icfg, s.cfg);
  CHECK_FALSE(rep.pass);
  CHECK(rep.worst_excess > 0.0);
}

TEST_CASE("barrier confidence follows the sampling formula") {
  BallSetup s;
  const DeltaRobustnessCertificate cert = ball_certificate(s);
  BarrierConfig bc;
  bc.threads = 8;
  const BarrierVerificationReport rep = barrier_verify_fixed_delta(
      s.sys, s.orbit, cert.lyap, cert.delta_star, bc, s.cfg);
  CHECK(rep.confidence == 1.0 - std::pow(0.95, 100));
  CHECK(std::abs(rep.confidence - 0.994079470779666) <= 1e-12);
  CHECK(rep.samples == 100);
  CHECK(rep.region_level ==
        doctest::Approx(cert.lyap.k2 *
                        std::pow(cert.chi_star * cert.delta_star, 2.0))
            .epsilon(1e-15));
  // an affine guard pushes the bound through its unit gradient
  CHECK(rep.d_plus == doctest::Approx(cert.delta_star).epsilon(1e-9));
  CHECK(rep.d_minus == doctest::Approx(-cert.delta_star).epsilon(1e-9));
}

TEST_CASE("certified region passes the barrier condition") {
  BallSetup s;
  const DeltaRobustnessCertificate cert = ball_certificate(s);
  BarrierConfig bc;
  bc.samples = 200;
  bc.threads = 8;
  const BarrierVerificationReport rep = barrier_verify_fixed_delta(
      s.sys, s.orbit, cert.lyap, cert.delta_star, bc, s.cfg);
  CHECK(rep.pass);
  CHECK(rep.r_star == 1);
  CHECK(rep.failures == 0);
  CHECK(rep.worst_condition_margin >= 0.0);

  // forward containment: passing means every image stayed in the region;
  // spot-check with an independent draw
  CounterRng rng(99);
  Eigen::SelfAdjointEigenSolver<Matrix> es(cert.lyap.P);
  const Matrix p_inv_half = es.operatorInverseSqrt();
  const double r = rep.region_level;
  for (int i = 0; i < 16; ++i) {
    const Vector u = sample_ball(2, 1.0, rng);
    const Vector x = cert.lyap.x_star + std::sqrt(r) * (p_inv_half * u);
    for (const double d : {rep.d_minus, 0.0, rep.d_plus}) {
      const Vector y = poincare_extended(s.sys, x, d, s.cfg);
      CHECK(lyap_value(cert.lyap, y) <= r);
    }
  }
}

TEST_CASE("fragile model fails the barrier at the same bound") {
  BallSetup s;
  const DeltaRobustnessCertificate cert = ball_certificate(s);
  HybridSystemModel frag = fragile_ball(BouncingBallParams{}, 1e-3);
  PeriodicOrbit frag_orbit = find_fixed_point(frag, Vector{{0.0, -5.0}}, s.cfg);
  auto frag_lyap = make_lyapunov_certificate(
      frag_orbit.jacobian, Matrix::Identity(2, 2), 0.1, frag_orbit.x_star,
      frag.scale_or_ones());
  frag_lyap.chi = cert.chi_star;

  BarrierConfig bc;
  bc.threads = 8;
  const BarrierVerificationReport rep = barrier_verify_fixed_delta(
      frag, frag_orbit, frag_lyap, cert.delta_star, bc, s.cfg);
  CHECK_FALSE(rep.pass);
  CHECK(rep.r_star == 0);
  CHECK(rep.failures == bc.samples);
  CHECK(std::isinf(rep.worst_condition_margin));
}

TEST_CASE("barrier parameters are validated") {
  BallSetup s;
  const DeltaRobustnessCertificate cert = ball_certificate(s);
  BarrierConfig bc;
  bc.gamma_b = 0.0;
  CHECK_THROWS_AS(barrier_verify_fixed_delta(s.sys, s.orbit, cert.lyap, 0.006,
                                             bc, s.cfg),
                  DegenerateConfig);
  bc = BarrierConfig{};
  CHECK_THROWS_AS(barrier_verify_fixed_delta(s.sys, s.orbit, cert.lyap, 0.0,
                                             bc, s.cfg),
                  DegenerateConfig);
  RobustLyapunovCertificate empty;
  CHECK_THROWS_AS(barrier_verify_fixed_delta(s.sys, s.orbit, empty, 0.006,
                                             bc, s.cfg),
                  DegenerateConfig);
}

TEST_CASE("barrier verdicts are reproducible across thread counts") {
  BallSetup s;
  const DeltaRobustnessCertificate cert = ball_certificate(s);
  BarrierConfig bc;
  bc.seed = 7;
  bc.threads = 1;
  const auto rep1 = barrier_verify_fixed_delta(s.sys, s.orbit, cert.lyap,
                                               cert.delta_star, bc, s.cfg);
  bc.threads = 8;
  const auto rep8 = barrier_verify_fixed_delta(s.sys, s.orbit, cert.lyap,
                                               cert.delta_star, bc, s.cfg);
  CHECK(rep1.worst_condition_margin == rep8.worst_condition_margin);
  CHECK(rep1.failures == rep8.failures);
  CHECK(barrier_report_to_json(rep1).dump() ==
        barrier_report_to_json(rep8).dump());
}

TEST_CASE("bound search returns its only passing candidate exactly") {
  BallSetup s;
  const DeltaRobustnessCertificate cert = ball_certificate(s);
  BarrierMaxConfig mc;
  mc.delta_hi = cert.delta_star;  // candidates stay inside the safe bound
  mc.outer_samples = 1;
  mc.seed = 3;
  mc.threads = 8;
  const BarrierMaxReport rep =
      barrier_max_delta(s.sys, s.orbit, cert.lyap, mc, s.cfg);
  REQUIRE(rep.any_passed);
  REQUIRE(rep.accepted.size() == 1);
  CHECK(rep.delta_star == rep.accepted[0]);
  CHECK(rep.delta_star > 0.0);
  CHECK(rep.delta_star <= mc.delta_hi);
  CHECK(rep.reports.size() == 1);
  CHECK(rep.reports[0].pass);
  CHECK(rep.confidence == 1.0 - std::pow(0.95, 1));
}

TEST_CASE("bound search on the fragile model rejects everything") {
  BallSetup s;
  const DeltaRobustnessCertificate cert = ball_certificate(s);
  HybridSystemModel frag = fragile_ball(BouncingBallParams{}, 1e-3);
  PeriodicOrbit frag_orbit = find_fixed_point(frag, Vector{{0.0, -5.0}}, s.cfg);
  auto frag_lyap = make_lyapunov_certificate(
      frag_orbit.jacobian, Matrix::Identity(2, 2), 0.1, frag_orbit.x_star,
      frag.scale_or_ones());
  frag_lyap.chi = cert.chi_star;

  BarrierMaxConfig mc;
  mc.delta_hi = 0.05;
  mc.threads = 8;
  const BarrierMaxReport rep =
      barrier_max_delta(frag, frag_orbit, frag_lyap, mc, s.cfg);
  CHECK_FALSE(rep.any_passed);
  CHECK(rep.delta_star == 0.0);
  CHECK(rep.accepted.empty());
  CHECK(rep.reports.size() == 20);
}
