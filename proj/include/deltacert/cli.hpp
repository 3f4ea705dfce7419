#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace deltacert {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNoOrbit = 2;
inline constexpr int kExitNotCertified = 3;
inline constexpr int kExitSoundness = 4;
inline constexpr int kExitUsage = 64;

/// Parsed command-line state shared by all subcommands. Empty strings and
/// negative numbers mean "not given on the command line".
struct CliOptions {
  std::string config_path;
  std::string model;
  std::vector<std::string> params;  // KEY=VALUE
  std::string seed;                 // decimal uint64
  std::string out_dir;
  int threads = -1;
  bool strict_annulus = false;

  std::string certificate_path;  // verify-iss, barrier
  double force_delta = -1.0;     // verify-iss: overrides the certified delta
  bool barrier_max = false;      // barrier: search mode instead of fixed
  double barrier_delta = -1.0;   // barrier: fixed-mode level
  int sim_steps = -1;            // simulate
  double sim_delta = -1.0;       // simulate
};

int cmd_find_orbit(const CliOptions& opt);
int cmd_certify(const CliOptions& opt);
int cmd_verify_iss(const CliOptions& opt);
int cmd_barrier(const CliOptions& opt);
int cmd_simulate(const CliOptions& opt);

}  // namespace deltacert
