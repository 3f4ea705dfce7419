#include "deltacert/run_config.hpp"

#include <cstdlib>
#include <limits>
#include <set>
#include <type_traits>

#include "json.hpp"

#include "deltacert/models.hpp"

#ifndef DELTACERT_DEFAULT_MODEL_DIR
#define DELTACERT_DEFAULT_MODEL_DIR "config"
#endif

namespace deltacert {
namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& msg) { throw DegenerateConfig(msg); }

/// Wraps one JSON object; every key must be claimed by get()/child() or
/// finish() rejects the document.
class StrictObject {
 public:
  StrictObject(const json& j, std::string where)
      : j_(j), where_(std::move(where)) {
    if (!j.is_object()) bad(where_ + " must be a JSON object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    const json& v = j_.at(key);
    // Accept the writer's tagged strings for non-finite doubles so that a
    // resolved-config echo parses back unchanged.
    if constexpr (std::is_same_v<T, double>) {
      if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s == "inf") {
          out = std::numeric_limits<double>::infinity();
          return;
        }
        if (s == "-inf") {
          out = -std::numeric_limits<double>::infinity();
          return;
        }
        if (s == "nan") {
          out = std::numeric_limits<double>::quiet_NaN();
          return;
        }
        bad(where_ + "." + key + " has the wrong type");
      }
    }
    try {
      out = v.get<T>();
    } catch (const json::exception&) {
      bad(where_ + "." + key + " has the wrong type");
    }
  }

  const json* child(const std::string& key) {
    if (!j_.contains(key)) return nullptr;
    seen_.insert(key);
    return &j_.at(key);
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) {
        bad("unknown config key: " + where_ + "." + item.key());
      }
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

void parse_model(const json& j, RunConfig& cfg) {
  StrictObject o(j, "model");
  o.get("name", cfg.model_name);
  if (const json* params = o.child("params")) {
    if (!params->is_object()) bad("model.params must be an object");
    for (const auto& item : params->items()) {
      if (!item.value().is_number()) {
        bad("model.params." + item.key() + " must be a number");
      }
      cfg.model_params[item.key()] = item.value().get<double>();
    }
  }
  o.finish();
}

void parse_integrator(const json& j, IntegratorConfig& c) {
  StrictObject o(j, "integrator");
  o.get("rel_tol", c.rel_tol);
  o.get("abs_tol", c.abs_tol);
  o.get("max_step", c.max_step);
  o.get("event_tol", c.event_tol);
  o.get("t_dwell", c.t_dwell);
  o.get("max_horizon", c.max_horizon);
  o.get("blowup_norm", c.blowup_norm);
  o.get("grazing_rate_tol", c.grazing_rate_tol);
  o.get("dense_samples", c.dense_samples);
  o.finish();
}

void parse_certify(const json& j, CertifyConfig& c) {
  StrictObject o(j, "certify");
  o.get("delta_step", c.delta_step);
  o.get("chi_step", c.chi_step);
  o.get("chi_max", c.chi_max);
  o.get("samples", c.samples);
  o.get("k", c.k);
  o.get("d_grid", c.d_grid);
  o.get("strict_annulus", c.strict_annulus);
  o.get("delta_cap", c.delta_cap);
  o.get("audit", c.audit);
  o.finish();
}

void parse_rollout(const json& j, RolloutConfig& c) {
  StrictObject o(j, "rollout");
  o.get("num_rollouts", c.num_rollouts);
  o.get("steps", c.steps);
  o.get("init_dist", c.init_dist);
  o.get("delta_override", c.delta_override);
  o.finish();
}

void parse_invariance(const json& j, InvarianceConfig& c) {
  StrictObject o(j, "invariance");
  o.get("boundary_samples", c.boundary_samples);
  o.get("excess_tol", c.excess_tol);
  o.finish();
}

void parse_barrier(const json& j, BarrierRunConfig& c) {
  StrictObject o(j, "barrier");
  o.get("mode", c.mode);
  o.get("delta", c.delta);
  o.get("gamma_b", c.gamma_b);
  o.get("samples", c.samples);
  o.get("epsilon", c.epsilon);
  o.get("d_grid", c.d_grid);
  o.get("delta_hi", c.delta_hi);
  o.get("outer_samples", c.outer_samples);
  o.get("inner_samples", c.inner_samples);
  o.get("chi", c.chi);
  o.finish();
  if (c.mode != "fixed" && c.mode != "max") {
    bad("barrier.mode must be fixed or max");
  }
  if (c.chi <= 0.0) bad("barrier.chi must be positive");
}

void parse_simulate(const json& j, SimulateConfig& c) {
  StrictObject o(j, "simulate");
  o.get("steps", c.steps);
  o.get("delta", c.delta);
  o.get("x0", c.x0);
  o.finish();
}

void parse_orbit(const json& j, OrbitSearchConfig& c) {
  StrictObject o(j, "orbit");
  o.get("guess", c.guess);
  o.get("tol_scale", c.fp.tol_scale);
  o.get("max_iterations", c.fp.max_iterations);
  o.get("fd_step", c.fp.fd_step);
  o.get("max_backtracks", c.fp.max_backtracks);
  o.finish();
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& ex) {
    bad(std::string("config parse error: ") + ex.what());
  }
  RunConfig cfg;
  StrictObject o(doc, "config");
  if (const json* j = o.child("model")) parse_model(*j, cfg);
  if (const json* j = o.child("integrator")) parse_integrator(*j, cfg.integrator);
  if (const json* j = o.child("certify")) parse_certify(*j, cfg.certify);
  if (const json* j = o.child("rollout")) parse_rollout(*j, cfg.rollout);
  if (const json* j = o.child("invariance")) parse_invariance(*j, cfg.invariance);
  if (const json* j = o.child("barrier")) parse_barrier(*j, cfg.barrier);
  if (const json* j = o.child("simulate")) parse_simulate(*j, cfg.simulate);
  if (const json* j = o.child("orbit")) parse_orbit(*j, cfg.orbit);
  o.get("seed", cfg.seed);
  o.get("out_dir", cfg.out_dir);
  o.get("threads", cfg.threads);
  o.finish();
  if (cfg.threads < 0) bad("threads must be >= 0");
  return cfg;
}

Json run_config_to_json(const RunConfig& cfg,
                        const std::map<std::string, double>& resolved_params) {
  Json params = Json::object();
  for (const auto& [key, value] : resolved_params) {
    params.set(key, Json::number(value));
  }
  Json model = Json::object()
      .set("name", Json::string(cfg.model_name))
      .set("params", std::move(params));

  Json integrator = Json::object()
      .set("rel_tol", Json::number(cfg.integrator.rel_tol))
      .set("abs_tol", Json::number(cfg.integrator.abs_tol))
      .set("max_step", Json::number(cfg.integrator.max_step))
      .set("event_tol", Json::number(cfg.integrator.event_tol))
      .set("t_dwell", Json::number(cfg.integrator.t_dwell))
      .set("max_horizon", Json::number(cfg.integrator.max_horizon))
      .set("blowup_norm", Json::number(cfg.integrator.blowup_norm))
      .set("grazing_rate_tol", Json::number(cfg.integrator.grazing_rate_tol))
      .set("dense_samples", Json::integer(cfg.integrator.dense_samples));

  Json certify = Json::object()
      .set("delta_step", Json::number(cfg.certify.delta_step))
      .set("chi_step", Json::number(cfg.certify.chi_step))
      .set("chi_max", Json::number(cfg.certify.chi_max))
      .set("samples", Json::integer(cfg.certify.samples))
      .set("k", Json::number(cfg.certify.k))
      .set("d_grid", Json::integer(cfg.certify.d_grid))
      .set("strict_annulus", Json::boolean(cfg.certify.strict_annulus))
      .set("delta_cap", Json::number(cfg.certify.delta_cap))
      .set("audit", Json::boolean(cfg.certify.audit));

  Json rollout = Json::object()
      .set("num_rollouts", Json::integer(cfg.rollout.num_rollouts))
      .set("steps", Json::integer(cfg.rollout.steps))
      .set("init_dist", Json::string(cfg.rollout.init_dist))
      .set("delta_override", Json::number(cfg.rollout.delta_override));

  Json invariance = Json::object()
      .set("boundary_samples", Json::integer(cfg.invariance.boundary_samples))
      .set("excess_tol", Json::number(cfg.invariance.excess_tol));

  Json barrier = Json::object()
      .set("mode", Json::string(cfg.barrier.mode))
      .set("delta", Json::number(cfg.barrier.delta))
      .set("gamma_b", Json::number(cfg.barrier.gamma_b))
      .set("samples", Json::integer(cfg.barrier.samples))
      .set("epsilon", Json::number(cfg.barrier.epsilon))
      .set("d_grid", Json::integer(cfg.barrier.d_grid))
      .set("delta_hi", Json::number(cfg.barrier.delta_hi))
      .set("outer_samples", Json::integer(cfg.barrier.outer_samples))
      .set("inner_samples", Json::integer(cfg.barrier.inner_samples))
      .set("chi", Json::number(cfg.barrier.chi));

  Json simulate = Json::object()
      .set("steps", Json::integer(cfg.simulate.steps))
      .set("delta", Json::number(cfg.simulate.delta));
  Json x0 = Json::array();
  for (const double v : cfg.simulate.x0) x0.push(Json::number(v));
  simulate.set("x0", std::move(x0));

  Json orbit = Json::object();
  Json guess = Json::array();
  for (const double v : cfg.orbit.guess) guess.push(Json::number(v));
  orbit.set("guess", std::move(guess))
      .set("tol_scale", Json::number(cfg.orbit.fp.tol_scale))
      .set("max_iterations", Json::integer(cfg.orbit.fp.max_iterations))
      .set("fd_step", Json::number(cfg.orbit.fp.fd_step))
      .set("max_backtracks", Json::integer(cfg.orbit.fp.max_backtracks));

  return Json::object()
      .set("model", std::move(model))
      .set("integrator", std::move(integrator))
      .set("certify", std::move(certify))
      .set("rollout", std::move(rollout))
      .set("invariance", std::move(invariance))
      .set("barrier", std::move(barrier))
      .set("simulate", std::move(simulate))
      .set("orbit", std::move(orbit))
      .set("seed", Json::uinteger(cfg.seed))
      .set("out_dir", Json::string(cfg.out_dir))
      .set("threads", Json::integer(cfg.threads));
}

std::string model_dir() {
  if (const char* env = std::getenv("DELTACERT_MODEL_DIR")) return env;
  return DELTACERT_DEFAULT_MODEL_DIR;
}

namespace {

std::string normalized(std::string name) {
  for (char& c : name) {
    if (c == '-') c = '_';
  }
  return name;
}

double take(std::map<std::string, double>& params, const std::string& key,
            double fallback) {
  const auto it = params.find(key);
  if (it == params.end()) return fallback;
  const double v = it->second;
  params.erase(it);
  return v;
}

void reject_leftovers(const std::map<std::string, double>& params,
                      const std::string& model) {
  if (!params.empty()) {
    bad("unknown parameter for " + model + ": " + params.begin()->first);
  }
}

BuiltModel build_ball(const RunConfig& cfg, bool fragile) {
  std::map<std::string, double> params = cfg.model_params;
  BouncingBallParams p;
  p.g = take(params, "g", p.g);
  p.e = take(params, "e", p.e);
  p.u0 = take(params, "u0", p.u0);
  double band = 0.3;
  if (fragile) band = take(params, "band", band);
  reject_leftovers(params, cfg.model_name);

  BuiltModel built;
  built.sys = fragile ? fragile_ball(p, band) : bouncing_ball(p);
  built.orbit_guess = Vector(2);
  if (fragile) {
    // The Newton search must stay inside the reset acceptance band, so
    // start on the nominal orbit.
    built.orbit_guess << 0.0, -p.u0 / (1.0 - p.e);
  } else {
    built.orbit_guess << 0.0, -4.0;
  }
  return built;
}

BuiltModel build_compass(const RunConfig& cfg) {
  const std::string path = model_dir() + "/compass_gait.json";
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& ex) {
    bad(path + ": " + ex.what());
  }

  CompassGaitParams p;
  std::vector<double> guess;
  {
    StrictObject o(doc, "compass_gait");
    o.get("m", p.m);
    o.get("m_h", p.m_h);
    o.get("a", p.a);
    o.get("b", p.b);
    o.get("length", p.length);
    o.get("g", p.g);
    o.get("slope", p.slope);
    o.get("orbit_guess", guess);
    o.finish();
  }

  std::map<std::string, double> params = cfg.model_params;
  p.m = take(params, "m", p.m);
  p.m_h = take(params, "m_h", p.m_h);
  p.a = take(params, "a", p.a);
  p.b = take(params, "b", p.b);
  p.length = take(params, "length", p.length);
  p.g = take(params, "g", p.g);
  p.slope = take(params, "slope", p.slope);
  reject_leftovers(params, cfg.model_name);

  BuiltModel built;
  built.sys = compass_gait(p);
  if (guess.size() != 4) {
    bad(path + ": orbit_guess must have 4 entries");
  }
  built.orbit_guess = Eigen::Map<const Vector>(guess.data(), 4);
  return built;
}

}  // namespace

BuiltModel build_model(const RunConfig& cfg) {
  const std::string name = normalized(cfg.model_name);
  BuiltModel built;
  if (name == "bouncing_ball") {
    built = build_ball(cfg, false);
  } else if (name == "fragile_ball") {
    built = build_ball(cfg, true);
  } else if (name == "compass_gait") {
    built = build_compass(cfg);
  } else {
    bad("unknown model: " + cfg.model_name);
  }
  if (!cfg.orbit.guess.empty()) {
    if (static_cast<int>(cfg.orbit.guess.size()) != built.sys.dim) {
      bad("orbit.guess dimension does not match the model");
    }
    built.orbit_guess = Eigen::Map<const Vector>(
        cfg.orbit.guess.data(), static_cast<Eigen::Index>(cfg.orbit.guess.size()));
  }
  return built;
}

}  // namespace deltacert
