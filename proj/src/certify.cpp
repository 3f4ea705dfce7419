#include "deltacert/certify.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

#include "deltacert/log.hpp"

namespace deltacert {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Stream tags keeping every sampling context on its own counter sequence.
constexpr std::uint64_t kTrialStream = 0x7472696C;
constexpr std::uint64_t kAuditStream = 0x61756474;
constexpr std::uint64_t kFreshAuditStream = 0x66726175;
constexpr std::uint64_t kIssInitStream = 0x69737330;
constexpr std::uint64_t kIssDistStream = 0x69737331;
constexpr std::uint64_t kInvStream = 0x696E7661;
constexpr std::uint64_t kBarrierStream = 0x62617272;
constexpr std::uint64_t kBarrierMaxStream = 0x62616D78;

int resolve_threads(int threads) {
  if (threads > 0) return threads;
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Runs fn(0..total-1) on up to `threads` workers. Work items must only
/// write to their own output slots; results are then reduced in index order
/// by the caller, so the outcome is identical for any thread count.
void parallel_for(int total, int threads, const std::function<void(int)>& fn) {
  const int workers = std::min(resolve_threads(threads), std::max(total, 1));
  if (workers <= 1) {
    for (int i = 0; i < total; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const int i = next.fetch_add(1);
        if (i >= total) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::vector<double> make_grid(double lo, double hi, int count) {
  std::vector<double> grid(count);
  for (int j = 0; j < count; ++j) {
    grid[j] = lo + (hi - lo) * j / (count - 1);
  }
  return grid;
}

Vector from_scaled(const Vector& x_star, const Vector& scale,
                   const Vector& z) {
  return x_star + (scale.array() * z.array()).matrix();
}

/// Worst decrease margin over a batch of sphere samples crossed with the
/// full guard-level grid. Stream tags make the batch reproducible and
/// independent of the trial samples.
double batch_worst_margin(const HybridSystemModel& sys,
                          const RobustLyapunovCertificate& lyap, double delta,
                          double chi, double k, int samples, bool annulus,
                          int d_grid, std::uint64_t seed,
                          std::uint64_t stream_tag, std::uint64_t stream_sub,
                          int threads, const IntegratorConfig& cfg) {
  const int n = static_cast<int>(lyap.x_star.size());
  const Vector scale = lyap.state_scale;
  const std::vector<double> grid = make_grid(-delta, delta, d_grid);
  const int total = annulus ? 2 * samples : samples;
  std::vector<double> margins(total, kInf);

  parallel_for(total, threads, [&](int i) {
    CounterRng rng(seed, stream_tag, stream_sub,
                   static_cast<std::uint64_t>(i));
    double radius = chi * delta;
    if (i >= samples) {
      // Annulus pass: radii drawn uniformly between the certified sphere
      // and the outer radius of the residual set.
      const double r1 = chi * delta;
      const double r2 = std::sqrt(lyap.k2 / lyap.k1) * chi * delta;
      radius = r1 + (r2 - r1) * rng.uniform01();
    }
    const Vector z = sample_sphere(n, radius, rng);
    const Vector x = from_scaled(lyap.x_star, scale, z);
    double worst = kInf;
    for (const double d : grid) {
      worst = std::min(worst, decrease_margin(sys, lyap, x, d, k, cfg));
    }
    margins[i] = worst;
  });

  double worst = kInf;
  for (const double m : margins) worst = std::min(worst, m);
  return worst;
}

void validate_certify_config(const CertifyConfig& cc) {
  if (cc.delta_step <= 0.0 || cc.chi_step <= 0.0 || cc.chi_max < 0.0 ||
      cc.samples < 1 || cc.k <= 0.0 || cc.d_grid < 2 || cc.threads < 0 ||
      cc.delta_cap <= 0.0) {
    throw DegenerateConfig("certify search parameters out of range");
  }
}

}  // namespace

TheoremConstants theorem_constants(double k1, double k2, double k3, double c,
                                   double chi, double delta, double rho) {
  const bool ok = k1 > 0.0 && k2 >= k1 && k3 > 0.0 && k3 < k2 && c > 0.0 &&
                  chi > 0.0 && delta > 0.0 && rho > 0.0;
  if (!ok) {
    throw BadConstants(
        "need 0 < k1 <= k2, 0 < k3 < k2, and positive c, chi, delta, rho");
  }
  TheoremConstants tc;
  tc.M = std::pow(k2 / k1, 1.0 / c);
  tc.alpha = std::pow(1.0 - k3 / k2, 1.0 / c);
  tc.gamma = tc.M * chi;
  tc.r_delta = k2 * std::pow(chi * delta, c);
  tc.delta_max = std::pow(k1 / (std::pow(chi, c) * k2), 1.0 / c) * rho;
  tc.r1 = chi * delta;
  tc.r2 = tc.M * chi * delta;
  if (delta >= tc.delta_max) {
    throw HypothesisViolated("delta " + std::to_string(delta) +
                             " is not below delta_max " +
                             std::to_string(tc.delta_max));
  }
  return tc;
}

DeltaRobustnessCertificate test_delta(const HybridSystemModel& sys,
                                      const PeriodicOrbit& orbit,
                                      const CertifyConfig& cc,
                                      const IntegratorConfig& cfg) {
  validate_certify_config(cc);
  cfg.validate();

  const int n = sys.dim;
  const Vector scale = sys.scale_or_ones();
  RobustLyapunovCertificate lyap = make_lyapunov_certificate(
      orbit.jacobian, Matrix::Identity(n, n), cc.k, orbit.x_star, scale);

  DomainProbeConfig probe;
  probe.seed = cc.seed;
  const double rho = estimate_domain_radius(sys, orbit.x_star, cfg, probe);

  DeltaRobustnessCertificate cert;
  cert.k = cc.k;
  cert.lyap = lyap;
  cert.rho_estimate = rho;
  cert.samples_per_trial = cc.samples;
  cert.d_grid = cc.d_grid;
  cert.strict_annulus = cc.strict_annulus;
  cert.seed = cc.seed;

  // The guard-level grid must stay inside the model's declared interval.
  double cap = cc.delta_cap;
  cap = std::min(cap, -sys.guard_min);
  cap = std::min(cap, sys.guard_max);
  if (cap <= 0.0) return cert;

  struct AcceptedPair {
    double delta;
    double chi;
  };
  std::vector<AcceptedPair> accepted;

  double delta = cc.delta_step;
  double chi = 1.0;
  std::uint64_t trial_index = 0;
  while (delta <= cap * (1.0 + 1e-12)) {
    if (chi > cc.chi_max * (1.0 + 1e-12)) break;
    TrialRecord tr;
    tr.delta = delta;
    tr.chi = chi;
    tr.worst_margin = batch_worst_margin(
        sys, lyap, delta, chi, cc.k, cc.samples, cc.strict_annulus, cc.d_grid,
        cc.seed, kTrialStream, trial_index, cc.threads, cfg);
    tr.pass = tr.worst_margin >= 0.0;
    cert.trials.push_back(tr);
    ++trial_index;
    if (tr.pass) {
      accepted.push_back({delta, chi});
      delta += cc.delta_step;
      chi = 1.0;
    } else {
      chi += cc.chi_step;
    }
  }

  // Assemble the certificate from the largest accepted pair that sits below
  // delta_max and survives a fresh audit batch.
  for (auto it = accepted.rbegin(); it != accepted.rend(); ++it) {
    TheoremConstants tc;
    try {
      tc = theorem_constants(lyap.k1, lyap.k2, cc.k, lyap.c, it->chi,
                             it->delta, rho);
    } catch (const Error&) {
      continue;
    }
    if (cc.audit) {
      const double audit_worst = batch_worst_margin(
          sys, lyap, it->delta, it->chi, cc.k, 10 * cc.samples,
          cc.strict_annulus, cc.d_grid, cc.seed, kAuditStream,
          static_cast<std::uint64_t>(it - accepted.rbegin()), cc.threads, cfg);
      if (audit_worst < 0.0) {
        log_warn("audit rejected delta = " + std::to_string(it->delta));
        continue;
      }
    }
    cert.certified = true;
    cert.delta_star = it->delta;
    cert.chi_star = it->chi;
    cert.constants = tc;
    cert.lyap.chi = it->chi;
    break;
  }
  return cert;
}

double audit_certificate(const HybridSystemModel& sys,
                         const DeltaRobustnessCertificate& cert,
                         int multiplier, const IntegratorConfig& cfg,
                         int threads) {
  if (!cert.certified) {
    throw BadConstants("cannot audit an uncertified result");
  }
  if (multiplier < 1) throw DegenerateConfig("audit multiplier must be >= 1");
  return batch_worst_margin(sys, cert.lyap, cert.delta_star, cert.chi_star,
                            cert.k, multiplier * cert.samples_per_trial,
                            cert.strict_annulus, cert.d_grid, cert.seed,
                            kFreshAuditStream, 0, threads, cfg);
}

IssReport verify_iss_bound(const HybridSystemModel& sys,
                           const DeltaRobustnessCertificate& cert,
                           const IssCheckConfig& icfg,
                           const IntegratorConfig& cfg,
                           double delta_override) {
  if (!cert.certified) {
    throw BadConstants("certificate has no certified bound to verify");
  }
  if (icfg.num_rollouts < 0 || icfg.steps < 0) {
    throw DegenerateConfig("rollout counts must be >= 0");
  }
  if (icfg.init_dist != "sublevel" && icfg.init_dist != "fixed_point") {
    throw DegenerateConfig("init_dist must be sublevel or fixed_point");
  }
  if (delta_override < 0.0) {
    throw DegenerateConfig("forced delta must be >= 0");
  }

  const double delta = delta_override > 0.0 ? delta_override : cert.delta_star;
  const double m_const = cert.constants.M;
  const double alpha = cert.constants.alpha;
  const double gamma = cert.constants.gamma;
  const double r_delta = cert.constants.r_delta;
  const double r_outer = std::sqrt(r_delta / cert.lyap.k1);
  const int n = static_cast<int>(cert.lyap.x_star.size());
  const Vector scale = cert.lyap.state_scale;

  IssReport report;
  report.num_rollouts = icfg.num_rollouts;
  report.steps = icfg.steps;
  report.seed = icfg.seed;
  report.delta = delta;

  std::vector<std::vector<IssRow>> per_rollout(icfg.num_rollouts);
  std::vector<int> violations(icfg.num_rollouts, 0);
  std::vector<int> truncations(icfg.num_rollouts, 0);
  std::vector<double> worst(icfg.num_rollouts, kInf);

  parallel_for(icfg.num_rollouts, icfg.threads, [&](int r) {
    auto& rows = per_rollout[r];
    rows.reserve(icfg.steps + 1);

    Vector z0 = Vector::Zero(n);
    if (icfg.init_dist == "sublevel") {
      CounterRng init_rng(icfg.seed, kIssInitStream,
                          static_cast<std::uint64_t>(r));
      // Rejection sampling: uniform ball of the outer radius, accepted
      // inside the invariant sublevel set.
      for (int attempt = 0; attempt < 100000; ++attempt) {
        const Vector z = sample_ball(n, r_outer, init_rng);
        if (z.dot(cert.lyap.P * z) <= r_delta) {
          z0 = z;
          break;
        }
      }
    }
    Vector x = from_scaled(cert.lyap.x_star, scale, z0);
    const double dist0 = z0.norm();

    IssRow row0;
    row0.rollout = r;
    row0.step = 0;
    row0.distance = dist0;
    row0.bound = m_const * dist0 + gamma * delta;
    row0.violated = row0.distance > row0.bound;
    rows.push_back(row0);
    worst[r] = row0.bound - row0.distance;
    if (row0.violated) ++violations[r];

    CounterRng d_rng(icfg.seed, kIssDistStream, static_cast<std::uint64_t>(r));
    double decay = 1.0;
    for (int k = 1; k <= icfg.steps; ++k) {
      const double dk = d_rng.uniform(-delta, delta);
      try {
        x = poincare_extended(sys, x, dk, cfg);
      } catch (const Error&) {
        ++truncations[r];
        break;
      }
      decay *= alpha;
      IssRow row;
      row.rollout = r;
      row.step = k;
      row.distance = ((x - cert.lyap.x_star).array() / scale.array())
                         .matrix()
                         .norm();
      row.bound = m_const * decay * dist0 + gamma * delta;
      row.violated = row.distance > row.bound;
      rows.push_back(row);
      worst[r] = std::min(worst[r], row.bound - row.distance);
      if (row.violated) ++violations[r];
    }
  });

  double worst_slack = kInf;
  for (int r = 0; r < icfg.num_rollouts; ++r) {
    report.violations += violations[r];
    report.truncations += truncations[r];
    worst_slack = std::min(worst_slack, worst[r]);
    report.rows.insert(report.rows.end(), per_rollout[r].begin(),
                       per_rollout[r].end());
  }
  report.worst_slack = std::isfinite(worst_slack) ? worst_slack : 0.0;
  return report;
}

InvarianceReport check_invariance(const HybridSystemModel& sys,
                                  const DeltaRobustnessCertificate& cert,
                                  const InvarianceConfig& icfg,
                                  const IntegratorConfig& cfg) {
  if (icfg.boundary_samples < 1) {
    throw DegenerateConfig("need at least one boundary sample");
  }
  const double r_delta = cert.certified ? cert.constants.r_delta : 0.0;
  const double delta = cert.delta_star;
  const int n = static_cast<int>(cert.lyap.x_star.size());
  const Vector scale = cert.lyap.state_scale;

  Eigen::SelfAdjointEigenSolver<Matrix> es(cert.lyap.P);
  if (es.info() != Eigen::Success) {
    throw NoConvergence("eigendecomposition of P failed");
  }
  const Matrix p_inv_half = es.operatorInverseSqrt();

  const int grid_count = cert.d_grid >= 2 ? cert.d_grid : 11;
  const std::vector<double> grid =
      delta > 0.0 ? make_grid(-delta, delta, grid_count)
                  : std::vector<double>{0.0};

  std::vector<double> excesses(icfg.boundary_samples, -kInf);
  parallel_for(icfg.boundary_samples, icfg.threads, [&](int i) {
    CounterRng rng(icfg.seed, kInvStream, static_cast<std::uint64_t>(i));
    const Vector u = sample_sphere(n, 1.0, rng);
    const Vector z = std::sqrt(r_delta) * (p_inv_half * u);
    const Vector x = from_scaled(cert.lyap.x_star, scale, z);
    double worst = -kInf;
    for (const double d : grid) {
      double excess = kInf;
      try {
        const Vector y = poincare_extended(sys, x, d, cfg);
        excess = lyap_value(cert.lyap, y) - r_delta;
      } catch (const Error&) {
        excess = kInf;
      }
      worst = std::max(worst, excess);
    }
    excesses[i] = worst;
  });

  InvarianceReport report;
  report.worst_excess = -kInf;
  for (const double e : excesses) {
    report.worst_excess = std::max(report.worst_excess, e);
  }
  report.pass = report.worst_excess <= icfg.excess_tol;
  return report;
}

BarrierVerificationReport barrier_verify_fixed_delta(
    const HybridSystemModel& sys, const PeriodicOrbit& orbit,
    const RobustLyapunovCertificate& lyap, double delta,
    const BarrierConfig& bc, const IntegratorConfig& cfg) {
  if (delta <= 0.0) throw DegenerateConfig("barrier delta must be positive");
  if (bc.gamma_b <= 0.0 || bc.gamma_b > 1.0 || bc.samples < 1 ||
      bc.epsilon <= 0.0 || bc.epsilon >= 1.0 || bc.d_grid < 2) {
    throw DegenerateConfig("barrier parameters out of range");
  }
  const int n = sys.dim;
  if (lyap.P.rows() != n || lyap.P.cols() != n ||
      static_cast<int>(lyap.x_star.size()) != n || lyap.chi <= 0.0 ||
      lyap.k2 <= 0.0 || lyap.c <= 0.0) {
    throw DegenerateConfig(
        "barrier needs a Lyapunov certificate matching the model");
  }

  const Vector scale = static_cast<int>(lyap.state_scale.size()) == n
                           ? lyap.state_scale
                           : sys.scale_or_ones();
  if (((lyap.x_star - orbit.x_star).array() / scale.array()).matrix().norm() >
      1e-6) {
    throw DegenerateConfig(
        "Lyapunov certificate is anchored at a different fixed point");
  }

  Eigen::SelfAdjointEigenSolver<Matrix> es(lyap.P);
  if (es.info() != Eigen::Success) {
    throw NoConvergence("eigendecomposition of P failed");
  }
  const Matrix p_inv_half = es.operatorInverseSqrt();

  const double r_level = lyap.k2 * std::pow(lyap.chi * delta, lyap.c);
  const Vector grad = guard_gradient_or_fd(sys, lyap.x_star);
  const double d_span =
      delta * (scale.array() * grad.array()).matrix().norm();

  BarrierVerificationReport report;
  report.delta = delta;
  report.gamma_b = bc.gamma_b;
  report.samples = bc.samples;
  report.epsilon = bc.epsilon;
  report.d_minus = -d_span;
  report.d_plus = d_span;
  report.chi = lyap.chi;
  report.region_level = r_level;
  report.confidence = 1.0 - std::pow(1.0 - bc.epsilon, bc.samples);

  const std::vector<double> grid =
      make_grid(report.d_minus, report.d_plus, bc.d_grid);

  std::vector<int> flags(bc.samples, 0);
  std::vector<double> margins(bc.samples, kInf);
  parallel_for(bc.samples, bc.threads, [&](int i) {
    CounterRng rng(bc.seed, kBarrierStream, static_cast<std::uint64_t>(i));
    const Vector u = sample_ball(n, 1.0, rng);
    const Vector z = std::sqrt(r_level) * (p_inv_half * u);
    const Vector x = from_scaled(lyap.x_star, scale, z);
    const double h_x = r_level - lyap_value(lyap, x);
    double worst = kInf;
    bool escaped = false;
    for (const double d : grid) {
      try {
        const Vector y = poincare_extended(sys, x, d, cfg);
        const double h_y = r_level - lyap_value(lyap, y);
        worst = std::min(worst, h_y - (1.0 - bc.gamma_b) * h_x);
      } catch (const Error&) {
        escaped = true;
        worst = -kInf;
        break;
      }
    }
    margins[i] = worst;
    flags[i] = (!escaped && worst >= 0.0) ? 1 : 0;
  });

  report.r_star = 1;
  report.worst_condition_margin = kInf;
  for (int i = 0; i < bc.samples; ++i) {
    report.r_star = std::min(report.r_star, flags[i]);
    if (flags[i] == 0) ++report.failures;
    report.worst_condition_margin =
        std::min(report.worst_condition_margin, margins[i]);
  }
  report.pass = report.failures == 0;
  return report;
}

BarrierMaxReport barrier_max_delta(const HybridSystemModel& sys,
                                   const PeriodicOrbit& orbit,
                                   const RobustLyapunovCertificate& lyap,
                                   const BarrierMaxConfig& mc,
                                   const IntegratorConfig& cfg) {
  if (mc.delta_hi <= 0.0) {
    throw DegenerateConfig("barrier search range collapsed");
  }
  if (mc.outer_samples < 1 || mc.inner_samples < 1) {
    throw DegenerateConfig("barrier sample counts must be >= 1");
  }

  BarrierMaxReport report;
  report.confidence = 1.0 - std::pow(1.0 - mc.epsilon, mc.outer_samples);
  for (int j = 0; j < mc.outer_samples; ++j) {
    CounterRng rng(mc.seed, kBarrierMaxStream, static_cast<std::uint64_t>(j));
    const double candidate = mc.delta_hi * (1.0 - rng.uniform01());
    BarrierConfig bc;
    bc.gamma_b = mc.gamma_b;
    bc.samples = mc.inner_samples;
    bc.epsilon = mc.epsilon;
    bc.d_grid = mc.d_grid;
    bc.seed = rng.next_u64();
    bc.threads = mc.threads;
    BarrierVerificationReport inner =
        barrier_verify_fixed_delta(sys, orbit, lyap, candidate, bc, cfg);
    if (inner.pass) {
      report.any_passed = true;
      report.accepted.push_back(candidate);
      report.delta_star = std::max(report.delta_star, candidate);
    }
    report.reports.push_back(std::move(inner));
  }
  return report;
}

}  // namespace deltacert
