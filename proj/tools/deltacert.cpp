#include <cstdio>
#include <functional>

#include "CLI11.hpp"

#include "deltacert/cli.hpp"
#include "deltacert/errors.hpp"

namespace {

void add_common_options(CLI::App* sub, deltacert::CliOptions& opt) {
  sub->add_option("--config", opt.config_path, "JSON run configuration");
  sub->add_option("--model", opt.model,
                  "model name (bouncing-ball, fragile-ball, compass-gait)");
  sub->add_option("--param", opt.params,
                  "model parameter override KEY=VALUE (repeatable)");
  sub->add_option("--seed", opt.seed, "root random seed (uint64)");
  sub->add_option("--out", opt.out_dir, "output directory");
  sub->add_option("--threads", opt.threads,
                  "worker threads (0 = hardware concurrency)");
  sub->add_flag("--strict-annulus", opt.strict_annulus,
                "also sample the certification annulus radii");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"certifies robustness of hybrid periodic orbits to guard-level disturbances"};
  app.require_subcommand(1);

  deltacert::CliOptions opt;
  std::function<int()> run;

  CLI::App* find_orbit = app.add_subcommand(
      "find-orbit", "locate the periodic orbit and its linearization");
  add_common_options(find_orbit, opt);
  find_orbit->callback([&] { run = [&] { return deltacert::cmd_find_orbit(opt); }; });

  CLI::App* certify = app.add_subcommand(
      "certify", "search for the largest certifiable disturbance bound");
  add_common_options(certify, opt);
  certify->callback([&] { run = [&] { return deltacert::cmd_certify(opt); }; });

  CLI::App* verify_iss = app.add_subcommand(
      "verify-iss", "empirically validate a certificate's trajectory bound");
  add_common_options(verify_iss, opt);
  verify_iss->add_option("--certificate", opt.certificate_path,
                         "certificate JSON emitted by certify")
      ->required();
  verify_iss->add_option("--force-delta", opt.force_delta,
                         "roll out with this disturbance level instead of "
                         "the certified one");
  verify_iss->callback([&] { run = [&] { return deltacert::cmd_verify_iss(opt); }; });

  CLI::App* barrier = app.add_subcommand(
      "barrier", "probabilistic barrier-condition verification");
  add_common_options(barrier, opt);
  barrier->add_option("--certificate", opt.certificate_path,
                      "take the fixed-mode level from this certificate");
  barrier->add_option("--delta", opt.barrier_delta, "fixed-mode level");
  barrier->add_flag("--max", opt.barrier_max,
                    "search for the largest passing level instead");
  barrier->callback([&] { run = [&] { return deltacert::cmd_barrier(opt); }; });

  CLI::App* simulate = app.add_subcommand(
      "simulate", "roll the map forward and dump plot-ready CSV");
  add_common_options(simulate, opt);
  simulate->add_option("--steps", opt.sim_steps, "number of map steps");
  simulate->add_option("--delta", opt.sim_delta,
                       "uniform disturbance amplitude");
  simulate->callback([&] { run = [&] { return deltacert::cmd_simulate(opt); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return deltacert::kExitUsage;
  }

  try {
    return run();
  } catch (const deltacert::Error& ex) {
    std::fprintf(stderr, "deltacert: error: %s\n", ex.what());
    return deltacert::kExitUsage;
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "deltacert: internal error: %s\n", ex.what());
    return 70;
  }
}
