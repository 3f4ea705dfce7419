#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "deltacert/lyapunov.hpp"
#include "deltacert/poincare.hpp"
#include "deltacert/rng.hpp"

namespace deltacert {

/// Constants of the sampled-certificate guarantee, all derived from the
/// Lyapunov bounds (k1, k2, k3, c), the scale factor chi, the certified
/// disturbance bound delta, and the map-domain radius rho:
///   M = (k2/k1)^(1/c)          overshoot
///   alpha = (1 - k3/k2)^(1/c)  per-step contraction, in (0,1)
///   gamma = M * chi            disturbance gain
///   r_delta = k2 (chi delta)^c invariant sublevel value
///   delta_max = (k1 / (chi^c k2))^(1/c) * rho
///   r1 = chi delta, r2 = M chi delta   inner/outer radii of the residual set
struct TheoremConstants {
  double M = 0.0;
  double alpha = 0.0;
  double gamma = 0.0;
  double r_delta = 0.0;
  double delta_max = 0.0;
  double r1 = 0.0;
  double r2 = 0.0;
};

/// Validates the inputs (0 < k1 <= k2, 0 < k3 < k2, c > 0, chi > 0,
/// delta > 0, rho > 0; BadConstants otherwise) and requires
/// delta < delta_max (HypothesisViolated otherwise).
TheoremConstants theorem_constants(double k1, double k2, double k3, double c,
                                   double chi, double delta, double rho);

struct CertifyConfig {
  double delta_step = 1e-3;  // disturbance increment per accepted level
  double chi_step = 1.0;     // scale escalation on a failed trial
  double chi_max = 50.0;     // escalation budget
  int samples = 64;          // sphere samples per trial
  double k = 0.1;            // required decrease rate
  int d_grid = 11;           // guard-level grid points over [-delta, delta]
  bool strict_annulus = false;  // also sample radii in [r1, r2]
  std::uint64_t seed = 0;
  int threads = 1;           // 0 = hardware concurrency
  /// Search never proposes delta beyond this (additionally capped by the
  /// model's declared guard interval).
  double delta_cap = std::numeric_limits<double>::infinity();
  bool audit = true;         // re-check the result on 10x fresh samples
};

struct TrialRecord {
  double delta = 0.0;
  double chi = 0.0;
  double worst_margin = 0.0;
  bool pass = false;
};

struct DeltaRobustnessCertificate {
  bool certified = false;
  double delta_star = 0.0;
  double chi_star = 0.0;
  double k = 0.0;
  TheoremConstants constants;
  RobustLyapunovCertificate lyap;
  double rho_estimate = 0.0;  // sampled map-domain radius, not a proof
  int samples_per_trial = 0;
  int d_grid = 0;
  bool strict_annulus = false;
  std::uint64_t seed = 0;
  std::vector<TrialRecord> trials;
};

/// Escalating search for the largest certified disturbance bound. Starting
/// from delta = delta_step with chi = 1, each trial draws fresh sphere
/// samples at radius chi*delta and checks decrease_margin >= 0 against every
/// guard level on the d-grid. A passing trial advances delta and resets chi;
/// a failing trial escalates chi; exhausting the chi budget ends the search
/// with the last accepted pair. The final pair is clamped under delta_max
/// and re-audited on 10x fresh samples before the certificate is assembled.
DeltaRobustnessCertificate test_delta(const HybridSystemModel& sys,
                                      const PeriodicOrbit& orbit,
                                      const CertifyConfig& cc,
                                      const IntegratorConfig& cfg);

/// Fresh-sample re-check of a certified (delta_star, chi_star) pair:
/// multiplier * samples_per_trial sphere samples against the full d-grid.
/// Returns the worst margin observed (>= 0 means the audit passed).
double audit_certificate(const HybridSystemModel& sys,
                         const DeltaRobustnessCertificate& cert,
                         int multiplier, const IntegratorConfig& cfg,
                         int threads = 1);

struct IssCheckConfig {
  int num_rollouts = 1000;
  int steps = 50;
  std::uint64_t seed = 0;
  /// "sublevel": uniform over the invariant set (rejection sampling);
  /// "fixed_point": all rollouts start at x_star.
  std::string init_dist = "sublevel";
  int threads = 1;
};

struct IssRow {
  int rollout = 0;
  int step = 0;
  double distance = 0.0;
  double bound = 0.0;
  bool violated = false;
};

struct IssReport {
  int num_rollouts = 0;
  int steps = 0;
  std::uint64_t seed = 0;
  double delta = 0.0;
  int violations = 0;
  int truncations = 0;
  double worst_slack = 0.0;  // min over steps of bound - distance
  std::vector<IssRow> rows;  // per-step trace in rollout-major order
};

/// Draws initial conditions in the certified invariant set, rolls the map
/// forward under i.i.d. uniform guard levels in [-delta*, delta*], and
/// checks the geometric disturbance bound
///   dist_k <= M alpha^k dist_0 + gamma delta*   at every step.
IssReport verify_iss_bound(const HybridSystemModel& sys,
                           const DeltaRobustnessCertificate& cert,
                           const IssCheckConfig& icfg,
                           const IntegratorConfig& cfg,
                           double delta_override = 0.0);

struct InvarianceConfig {
  int boundary_samples = 256;
  std::uint64_t seed = 0;
  /// Slack absorbing the fixed-point residual in the degenerate delta = 0
  /// case; genuine violations are orders of magnitude larger.
  double excess_tol = 1e-12;
  int threads = 1;
};

struct InvarianceReport {
  bool pass = false;
  double worst_excess = 0.0;  // max over samples of V(P_d(x)) - r_delta
};

/// Samples the boundary of the invariant sublevel set and verifies that
/// every image under every grid guard level stays inside.
InvarianceReport check_invariance(const HybridSystemModel& sys,
                                  const DeltaRobustnessCertificate& cert,
                                  const InvarianceConfig& icfg,
                                  const IntegratorConfig& cfg);

struct BarrierConfig {
  double gamma_b = 0.5;   // required fraction of barrier value retained
  int samples = 100;      // ball samples N
  double epsilon = 0.05;  // per-sample miss probability in the confidence
  int d_grid = 11;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct BarrierVerificationReport {
  double delta = 0.0;
  double gamma_b = 0.0;
  int samples = 0;
  double epsilon = 0.0;
  double d_minus = 0.0;
  double d_plus = 0.0;
  double chi = 0.0;          // scale factor inherited from the certificate
  double region_level = 0.0; // sublevel value r = k2 (chi delta)^c
  int r_star = 0;        // min over samples of the 0/1 satisfaction flag
  int failures = 0;      // samples whose condition (or map) failed
  double worst_condition_margin = 0.0;
  bool pass = false;     // every sample satisfied the barrier condition
  double confidence = 0.0;  // 1 - (1 - epsilon)^N
};

/// Probabilistic one-step invariance check of the certified region under
/// guard uncertainty: draws N states uniformly from the sublevel set
/// Omega_r = { V <= r }, r = k2 (chi delta)^c, and requires the barrier
///   H(x) = r - V(x)
/// to satisfy min over grid d of H(P_d(x)) >= (1 - gamma_b) H(x), with the
/// guard grid spanning [-delta, delta] pushed through the guard gradient
/// (d_minus/d_plus). A sample whose map escapes scores 0. The region is
/// measured in the certificate metric V because return maps with transient
/// overshoot (M > 1) push part of any Euclidean ball outside itself in one
/// step, so no Euclidean-ball barrier of this form can hold for them.
BarrierVerificationReport barrier_verify_fixed_delta(
    const HybridSystemModel& sys, const PeriodicOrbit& orbit,
    const RobustLyapunovCertificate& lyap, double delta,
    const BarrierConfig& bc, const IntegratorConfig& cfg);

struct BarrierMaxConfig {
  double delta_hi = 0.0;  // candidate bounds drawn uniformly from (0, delta_hi]
  int outer_samples = 20;
  int inner_samples = 100;
  double gamma_b = 0.5;
  double epsilon = 0.05;
  int d_grid = 11;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct BarrierMaxReport {
  double delta_star = 0.0;  // largest accepted candidate, 0 when none passed
  bool any_passed = false;
  double confidence = 0.0;  // 1 - (1 - epsilon)^outer_samples
  std::vector<double> accepted;
  std::vector<BarrierVerificationReport> reports;
};

/// Draws candidate bounds uniformly from the range and keeps those whose
/// fixed-delta verification passes. The region scales with each candidate
/// (r = k2 (chi delta')^c) while chi and the metric stay fixed.
BarrierMaxReport barrier_max_delta(const HybridSystemModel& sys,
                                   const PeriodicOrbit& orbit,
                                   const RobustLyapunovCertificate& lyap,
                                   const BarrierMaxConfig& mc,
                                   const IntegratorConfig& cfg);

}  // namespace deltacert
