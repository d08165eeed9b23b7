// Batch experiment driver: JSON config parsing, multi-seed orchestration,
// branch clustering, CSV emission with embedded provenance, and the CLI
// subcommand dispatch. All randomness comes from explicit seeds, and cell
// results are assembled in cell order, so identical configs produce
// byte-identical output (timing columns can be zeroed for comparisons).
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ucps/models.hpp"
#include "ucps/observables.hpp"

namespace ucps {

struct QuenchSpec {
  double h0 = 0.0, h1 = 0.0;
  double t_max = 1.0;
  double rkf_tol = 1e-8;
  double out_dt = 0.01;
};

struct OracleSpec {
  std::string kind;  // ising_energy | xy_energy | quench_rate |
                     // critical_times | heisenberg
  std::vector<double> h_list;
  double gamma = 1.0;
  double h0 = 0.0, h1 = 0.0;
  double t_max = 1.0, dt = 0.01;
};

struct RunConfig {
  ModelKind model = ModelKind::ising;
  ModelParams params;
  double theta = 0.0;
  Engine engine = Engine::ucps;
  int n = 1;  // block size (ucps engine)
  int D = 2;  // bond dimension (umps engine)
  std::vector<std::uint64_t> seeds = {1};
  double dt = 0.05;
  double tol = 1e-8;
  int max_steps = 50000;
  double bicgstab_tol = 1e-10;
  int bicgstab_max_iter = 500;
  std::optional<QuenchSpec> quench;
  std::vector<double> thetas;  // angle-scan grid
  std::vector<int> sizes;      // scaling: n values (ucps) or D values (umps)
  std::optional<OracleSpec> oracle;
  std::string output_path;        // empty = stdout
  std::string initial_state_path; // quench: load instead of converging
  std::string checkpoint_path;
  double cluster_tol = 1e-8;
  int threads = 1;
  bool zero_timings = false;
};

RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);
// Resolved config as a canonical single-line JSON string (keys sorted).
std::string config_to_json(const RunConfig& cfg);

// Single-linkage clustering on a gap tolerance: values within `tol` of a
// neighbour share a cluster. Returns a cluster id per input, numbered by
// ascending value; non-finite inputs get id -1.
std::vector<int> cluster_by_gap(const std::vector<double>& values, double tol);

// Each returns 0 when every cell succeeded, 1 otherwise.
int cmd_groundstate(const RunConfig& cfg, std::ostream& out);
int cmd_angle_scan(const RunConfig& cfg, std::ostream& out);
int cmd_quench(const RunConfig& cfg, std::ostream& out);
int cmd_scaling(const RunConfig& cfg, std::ostream& out);
int cmd_oracle(const RunConfig& cfg, std::ostream& out);

// Full command-line entry point (subcommands groundstate, angle-scan, quench,
// scaling, oracle; flags --config, --out, --seeds, --threads, --cluster-tol).
int run_cli(int argc, const char* const* argv);

}  // namespace ucps
