#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sislab/model.hpp"
#include "sislab/sde.hpp"

namespace sislab::cli {

// One sweep axis: `name=lo:hi:count[:log]`. Axis names may be direct model
// fields (beta, gamma, mu, sigma, N) or the derived dials r0_det and c0.
struct SweepAxis {
  std::string name;
  double lo = 0;
  double hi = 0;
  int count = 0;
  bool log = false;

  std::vector<double> values() const;
};

SweepAxis parse_sweep_axis(const std::string& text);

// Parsed configuration with defaults applied. beta/r0_det and sigma/c0 are
// alternates: exactly one of each pair must be present.
struct RunConfig {
  std::optional<double> beta, r0_det, sigma, c0;
  double gamma = 0;
  double mu = 0;
  double n_total = 0;
  double dt = 1e-3;
  double horizon = 100;
  std::optional<double> burn_in;  // default horizon/10, applied late
  std::optional<double> i0;       // default N/2, applied late
  std::uint64_t seed = 0;
  std::uint64_t paths = 1;
  std::size_t n_cells = 2000;
  std::size_t bins = 50;
  double tol = 1e-10;
  double max_time = 1e5;
  double extinction_threshold = -1;
  double eps = 0.1;
  std::vector<double> levels;
  std::vector<double> sigmas{0.5, 0.25, 0.1};
  std::vector<std::string> quantities{"r0_stoch"};
  Scheme scheme = Scheme::TransformedTamedEuler;

  ModelParams resolve_params() const;
  double resolve_burn_in() const { return burn_in ? *burn_in : horizon / 10; }
  double resolve_i0() const;
};

RunConfig parse_config(const std::string& text);
RunConfig parse_config_file(const std::string& path);

struct CliOptions {
  std::string subcommand;
  std::string config_path;
  std::string out_dir = ".";
  std::vector<SweepAxis> sweep;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> paths;
  std::optional<double> horizon;
  std::optional<double> dt;
  std::optional<std::size_t> cells;
  std::string command_line;  // echoed into the manifest
};

// Runs one subcommand with flag overrides already applied; writes outputs and
// the manifest into opt.out_dir. Returns the process exit code.
int execute(const CliOptions& opt, RunConfig cfg);

// Full entry point: argv -> flags -> config -> execute. Usage problems exit
// 2 before any file is written; computation failures exit 1 after removing
// partial outputs.
int run(int argc, const char* const* argv);

std::string sha256_hex(const void* data, std::size_t size);
std::string sha256_file(const std::string& path);

}  // namespace sislab::cli
