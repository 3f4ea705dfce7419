#pragma once

#include <map>
#include <string>
#include <vector>

#include "deltacert/certify.hpp"
#include "deltacert/hybrid.hpp"
#include "deltacert/io.hpp"
#include "deltacert/poincare.hpp"

namespace deltacert {

/// verify-iss settings.
struct RolloutConfig {
  int num_rollouts = 1000;
  int steps = 50;
  std::string init_dist = "sublevel";  // sublevel | fixed_point
  double delta_override = 0.0;  // 0 = use the certificate's delta_star
};

struct BarrierRunConfig {
  std::string mode = "fixed";  // fixed | max
  double delta = 0.0;          // fixed mode; 0 = certificate delta_star
  double gamma_b = 0.5;
  int samples = 100;
  double epsilon = 0.05;
  int d_grid = 11;
  double delta_hi = 0.05;  // max mode search range (0, delta_hi]
  int outer_samples = 20;
  int inner_samples = 100;
  double chi = 1.0;  // region scale when no certificate supplies one
};

struct SimulateConfig {
  int steps = 3;
  double delta = 0.0;       // disturbance amplitude, 0 = undisturbed
  std::vector<double> x0;   // empty = start on the periodic orbit
};

struct OrbitSearchConfig {
  std::vector<double> guess;  // empty = model default
  FixedPointConfig fp;
};

/// Fully-resolved run settings. Parsed strictly: unknown keys anywhere in
/// the document are rejected.
struct RunConfig {
  std::string model_name = "bouncing-ball";
  std::map<std::string, double> model_params;

  IntegratorConfig integrator;
  CertifyConfig certify;  // seed/threads are filled from the fields below
  RolloutConfig rollout;
  InvarianceConfig invariance;
  BarrierRunConfig barrier;
  SimulateConfig simulate;
  OrbitSearchConfig orbit;

  std::uint64_t seed = 0;
  std::string out_dir = "out";
  int threads = 1;  // 0 = hardware concurrency
};

/// Parses a config document, throwing DegenerateConfig on syntax errors,
/// unknown keys, or type mismatches.
RunConfig parse_run_config(const std::string& json_text);

/// Echo of the fully-resolved config; every field explicit, model params
/// replaced by the resolved map of the built model. Loading the echo
/// reproduces the run byte-for-byte.
Json run_config_to_json(const RunConfig& cfg,
                        const std::map<std::string, double>& resolved_params);

struct BuiltModel {
  HybridSystemModel sys;
  Vector orbit_guess;
};

/// Instantiates the configured model. Names: bouncing-ball, fragile-ball,
/// compass-gait (underscores accepted). compass-gait parameter defaults and
/// the orbit guess come from the versioned model file.
BuiltModel build_model(const RunConfig& cfg);

/// Directory holding versioned model parameter files: DELTACERT_MODEL_DIR
/// if set, else the install-time default.
std::string model_dir();

}  // namespace deltacert
