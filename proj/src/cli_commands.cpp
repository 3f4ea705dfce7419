#include "deltacert/cli.hpp"

#include <cstdio>
#include <stdexcept>
#include <string>

#include "deltacert/certify.hpp"
#include "deltacert/io.hpp"
#include "deltacert/log.hpp"
#include "deltacert/models.hpp"
#include "deltacert/poincare.hpp"
#include "deltacert/rng.hpp"
#include "deltacert/run_config.hpp"

namespace deltacert {
namespace {

constexpr std::uint64_t kSimulateStream = 0x73696D75;

void apply_overrides(const CliOptions& opt, RunConfig& cfg) {
  if (!opt.model.empty()) cfg.model_name = opt.model;
  for (const std::string& kv : opt.params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw DegenerateConfig("--param expects KEY=VALUE, got: " + kv);
    }
    const std::string key = kv.substr(0, eq);
    const std::string value = kv.substr(eq + 1);
    try {
      std::size_t used = 0;
      const double v = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
      cfg.model_params[key] = v;
    } catch (const std::exception&) {
      throw DegenerateConfig("--param value is not a number: " + kv);
    }
  }
  if (!opt.seed.empty()) {
    try {
      std::size_t used = 0;
      cfg.seed = std::stoull(opt.seed, &used);
      if (used != opt.seed.size()) throw std::invalid_argument(opt.seed);
    } catch (const std::exception&) {
      throw DegenerateConfig("--seed expects an unsigned integer");
    }
  }
  if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;
  if (opt.threads >= 0) cfg.threads = opt.threads;
  if (opt.strict_annulus) cfg.certify.strict_annulus = true;

  if (opt.force_delta >= 0.0) cfg.rollout.delta_override = opt.force_delta;
  if (opt.barrier_max) cfg.barrier.mode = "max";
  if (opt.barrier_delta >= 0.0) cfg.barrier.delta = opt.barrier_delta;
  if (opt.sim_steps >= 0) cfg.simulate.steps = opt.sim_steps;
  if (opt.sim_delta >= 0.0) cfg.simulate.delta = opt.sim_delta;
}

RunConfig load_config(const CliOptions& opt) {
  RunConfig cfg;
  if (!opt.config_path.empty()) {
    cfg = parse_run_config(read_text_file(opt.config_path));
  }
  apply_overrides(opt, cfg);
  return cfg;
}

void echo_config(const RunConfig& cfg, const HybridSystemModel& sys) {
  write_text_file(cfg.out_dir + "/resolved_config.json",
                  run_config_to_json(cfg, sys.params).dump());
}

PeriodicOrbit locate_orbit(const BuiltModel& bm, const RunConfig& cfg) {
  return find_fixed_point(bm.sys, bm.orbit_guess, cfg.integrator,
                          cfg.orbit.fp);
}

void print_orbit(const HybridSystemModel& sys, const PeriodicOrbit& orbit) {
  std::string x;
  for (Eigen::Index i = 0; i < orbit.x_star.size(); ++i) {
    if (i > 0) x += ", ";
    x += format_double(orbit.x_star(i));
  }
  std::printf("%s: fixed point [%s], period %s s, spectral radius %s (%d Newton iterations)\n",
              sys.name.c_str(), x.c_str(), format_double(orbit.period).c_str(),
              format_double(orbit.spectral_radius).c_str(),
              orbit.newton_iterations);
}

int usage_error(const std::string& msg) {
  std::fprintf(stderr, "deltacert: error: %s\n", msg.c_str());
  return kExitUsage;
}

int orbit_failure(const std::string& msg) {
  std::fprintf(stderr, "deltacert: no periodic orbit: %s\n", msg.c_str());
  return kExitNoOrbit;
}

}  // namespace

int cmd_find_orbit(const CliOptions& opt) {
  RunConfig cfg;
  PeriodicOrbit orbit;
  BuiltModel bm;
  try {
    cfg = load_config(opt);
    bm = build_model(cfg);
    echo_config(cfg, bm.sys);
  } catch (const DegenerateConfig& ex) {
    return usage_error(ex.what());
  }
  try {
    orbit = locate_orbit(bm, cfg);
  } catch (const Error& ex) {
    return orbit_failure(ex.what());
  }
  write_text_file(cfg.out_dir + "/orbit.json",
                  orbit_to_json(bm.sys, orbit).dump());
  print_orbit(bm.sys, orbit);
  return kExitOk;
}

int cmd_certify(const CliOptions& opt) {
  RunConfig cfg;
  BuiltModel bm;
  try {
    cfg = load_config(opt);
    bm = build_model(cfg);
    echo_config(cfg, bm.sys);
  } catch (const DegenerateConfig& ex) {
    return usage_error(ex.what());
  }
  PeriodicOrbit orbit;
  try {
    orbit = locate_orbit(bm, cfg);
  } catch (const Error& ex) {
    return orbit_failure(ex.what());
  }
  print_orbit(bm.sys, orbit);

  CertifyConfig cc = cfg.certify;
  cc.seed = cfg.seed;
  cc.threads = cfg.threads;
  const DeltaRobustnessCertificate cert =
      test_delta(bm.sys, orbit, cc, cfg.integrator);

  InvarianceConfig ic = cfg.invariance;
  ic.seed = cfg.seed;
  ic.threads = cfg.threads;
  const InvarianceReport inv =
      check_invariance(bm.sys, cert, ic, cfg.integrator);

  Json doc = certificate_to_json(bm.sys, orbit, cert, cc);
  doc.set("invariance", invariance_to_json(inv, ic));
  write_text_file(cfg.out_dir + "/certificate.json", doc.dump());
  write_text_file(cfg.out_dir + "/certificate_trace.csv",
                  trials_csv(cert.trials));

  if (cert.certified) {
    std::printf("certified: delta_star = %s, chi_star = %s, gamma = %s, invariance worst excess = %s\n",
                format_double(cert.delta_star).c_str(),
                format_double(cert.chi_star).c_str(),
                format_double(cert.constants.gamma).c_str(),
                format_double(inv.worst_excess).c_str());
    return kExitOk;
  }
  std::printf("not certified: delta_star = 0 after %d trials\n",
              static_cast<int>(cert.trials.size()));
  return kExitNotCertified;
}

int cmd_verify_iss(const CliOptions& opt) {
  RunConfig cfg;
  BuiltModel bm;
  DeltaRobustnessCertificate cert;
  try {
    cfg = load_config(opt);
    bm = build_model(cfg);
    echo_config(cfg, bm.sys);
    if (opt.certificate_path.empty()) {
      throw DegenerateConfig("verify-iss requires --certificate PATH");
    }
    cert = certificate_from_json(read_text_file(opt.certificate_path));
  } catch (const DegenerateConfig& ex) {
    return usage_error(ex.what());
  }

  IssCheckConfig ic;
  ic.num_rollouts = cfg.rollout.num_rollouts;
  ic.steps = cfg.rollout.steps;
  ic.init_dist = cfg.rollout.init_dist;
  ic.seed = cfg.seed;
  ic.threads = cfg.threads;

  IssReport report;
  try {
    report = verify_iss_bound(bm.sys, cert, ic, cfg.integrator,
                              cfg.rollout.delta_override);
  } catch (const Error& ex) {
    return usage_error(ex.what());
  }

  write_text_file(cfg.out_dir + "/iss_report.json",
                  iss_report_to_json(report).dump());
  write_text_file(cfg.out_dir + "/iss_rollouts.csv",
                  iss_rollouts_csv(report));

  std::printf("iss check: delta = %s, %d rollouts x %d steps, %d violations, %d truncations, worst slack = %s\n",
              format_double(report.delta).c_str(), report.num_rollouts,
              report.steps, report.violations, report.truncations,
              format_double(report.worst_slack).c_str());
  return (report.violations > 0 || report.truncations > 0) ? kExitSoundness
                                                           : kExitOk;
}

int cmd_barrier(const CliOptions& opt) {
  RunConfig cfg;
  BuiltModel bm;
  try {
    cfg = load_config(opt);
    bm = build_model(cfg);
    echo_config(cfg, bm.sys);
  } catch (const DegenerateConfig& ex) {
    return usage_error(ex.what());
  }
  PeriodicOrbit orbit;
  try {
    orbit = locate_orbit(bm, cfg);
  } catch (const Error& ex) {
    return orbit_failure(ex.what());
  }

  // The barrier is measured in a Lyapunov metric: take it from a certificate
  // when one is supplied, otherwise build one from the orbit's linearization
  // with the configured region scale.
  RobustLyapunovCertificate lyap;
  double cert_delta = 0.0;
  if (!opt.certificate_path.empty()) {
    try {
      const DeltaRobustnessCertificate cert =
          certificate_from_json(read_text_file(opt.certificate_path));
      lyap = cert.lyap;
      cert_delta = cert.delta_star;
    } catch (const DegenerateConfig& ex) {
      return usage_error(ex.what());
    }
  } else {
    try {
      const auto n = orbit.x_star.size();
      lyap = make_lyapunov_certificate(orbit.jacobian,
                                       Matrix::Identity(n, n), cfg.certify.k,
                                       orbit.x_star, bm.sys.scale_or_ones());
      lyap.chi = cfg.barrier.chi;
    } catch (const Error& ex) {
      std::fprintf(stderr, "deltacert: no certified region to verify: %s\n",
                   ex.what());
      return kExitNotCertified;
    }
  }

  if (cfg.barrier.mode == "max") {
    BarrierMaxConfig mc;
    mc.delta_hi = cfg.barrier.delta_hi;
    mc.outer_samples = cfg.barrier.outer_samples;
    mc.inner_samples = cfg.barrier.inner_samples;
    mc.gamma_b = cfg.barrier.gamma_b;
    mc.epsilon = cfg.barrier.epsilon;
    mc.d_grid = cfg.barrier.d_grid;
    mc.seed = cfg.seed;
    mc.threads = cfg.threads;
    BarrierMaxReport report;
    try {
      report = barrier_max_delta(bm.sys, orbit, lyap, mc, cfg.integrator);
    } catch (const DegenerateConfig& ex) {
      return usage_error(ex.what());
    }
    write_text_file(cfg.out_dir + "/barrier_report.json",
                    barrier_max_to_json(report).dump());
    std::printf("barrier search: delta_star = %s over %d candidates, confidence = %s\n",
                format_double(report.delta_star).c_str(), mc.outer_samples,
                format_double(report.confidence).c_str());
    return report.any_passed ? kExitOk : kExitNotCertified;
  }

  double delta = cfg.barrier.delta;
  if (delta <= 0.0) delta = cert_delta;
  if (delta <= 0.0) {
    return usage_error(
        "fixed-mode barrier needs barrier.delta > 0 or --certificate");
  }
  BarrierConfig bc;
  bc.gamma_b = cfg.barrier.gamma_b;
  bc.samples = cfg.barrier.samples;
  bc.epsilon = cfg.barrier.epsilon;
  bc.d_grid = cfg.barrier.d_grid;
  bc.seed = cfg.seed;
  bc.threads = cfg.threads;
  BarrierVerificationReport report;
  try {
    report = barrier_verify_fixed_delta(bm.sys, orbit, lyap, delta, bc,
                                        cfg.integrator);
  } catch (const DegenerateConfig& ex) {
    return usage_error(ex.what());
  }
  write_text_file(cfg.out_dir + "/barrier_report.json",
                  barrier_report_to_json(report).dump());
  std::printf("barrier check: delta = %s, verdict = %s, failures = %d / %d, confidence = %s\n",
              format_double(report.delta).c_str(),
              report.pass ? "pass" : "fail", report.failures, report.samples,
              format_double(report.confidence).c_str());
  return report.pass ? kExitOk : kExitNotCertified;
}

int cmd_simulate(const CliOptions& opt) {
  RunConfig cfg;
  BuiltModel bm;
  try {
    cfg = load_config(opt);
    bm = build_model(cfg);
    echo_config(cfg, bm.sys);
    if (cfg.simulate.steps < 0) {
      throw DegenerateConfig("simulate.steps must be >= 0");
    }
    if (cfg.simulate.delta < 0.0) {
      throw DegenerateConfig("simulate.delta must be >= 0");
    }
    if (!cfg.simulate.x0.empty() &&
        static_cast<int>(cfg.simulate.x0.size()) != bm.sys.dim) {
      throw DegenerateConfig("simulate.x0 dimension does not match the model");
    }
  } catch (const DegenerateConfig& ex) {
    return usage_error(ex.what());
  }

  Vector x;
  if (cfg.simulate.x0.empty()) {
    try {
      x = locate_orbit(bm, cfg).x_star;
    } catch (const Error& ex) {
      return orbit_failure(ex.what());
    }
  } else {
    x = Eigen::Map<const Vector>(cfg.simulate.x0.data(),
                                 static_cast<Eigen::Index>(cfg.simulate.x0.size()));
  }

  CounterRng rng(cfg.seed, kSimulateStream);
  std::vector<double> times;
  std::vector<Vector> flow_states;
  std::vector<double> disturbances{0.0};
  std::vector<Vector> step_states{x};

  double t_base = 0.0;
  for (int k = 1; k <= cfg.simulate.steps; ++k) {
    const double d =
        cfg.simulate.delta > 0.0
            ? rng.uniform(-cfg.simulate.delta, cfg.simulate.delta)
            : 0.0;
    try {
      const Vector x_post = apply_reset(bm.sys, x);
      const ImpactFlow impact =
          flow_to_guard(bm.sys, x_post, d, cfg.integrator);
      for (std::size_t i = 0; i < impact.trajectory.times.size(); ++i) {
        times.push_back(t_base + impact.trajectory.times[i]);
        flow_states.push_back(impact.trajectory.states[i]);
      }
      t_base += impact.time;
      x = impact.state;
    } catch (const Error& ex) {
      log_warn("rollout truncated at step " + std::to_string(k) + ": " +
               ex.what());
      break;
    }
    disturbances.push_back(d);
    step_states.push_back(x);
  }

  write_text_file(cfg.out_dir + "/trajectory.csv",
                  trajectory_csv(bm.sys, times, flow_states));
  write_text_file(cfg.out_dir + "/steps.csv",
                  steps_csv(bm.sys, disturbances, step_states));
  std::printf("simulated %d of %d steps, final time %s s\n",
              static_cast<int>(step_states.size()) - 1, cfg.simulate.steps,
              format_double(t_base).c_str());
  return kExitOk;
}

}  // namespace deltacert
