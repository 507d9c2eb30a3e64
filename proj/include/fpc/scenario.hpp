#pragma once

#include <json.hpp>
#include <iosfwd>
#include <memory>

#include "fpc/optimize.hpp"
#include "fpc/particle.hpp"

namespace fpc {

using json = nlohmann::json;

// Exit codes of the scenario runner.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

struct ScenarioConfig {
  int dimension = 1;
  double box = 6.0;
  int cells = 256;
  double horizon = 0.5;
  int steps = 64;

  std::string model_name = "rational-cubic";
  double kernel_R = 1.0;
  double M0 = 1.0;
  double R0 = 2.0;

  json initial;       // catalog entry for rho0
  json cost_running;  // catalog entry for G
  json cost_terminal; // catalog entry for G_T
  json cost_control;  // catalog entry for Q

  OptimizerSettings optimizer;
  int continuation_levels = 3;
  int continuation_N0 = 32;

  ParticleSettings particles;
  double mc_allowance = 0.0;   // discretization allowance for the crosscheck
  double kde_l1_bound = 0.0;   // declared bound for the KDE/FP comparison (0: skip)

  double validate_lo = -10.0;
  double validate_hi = 10.0;
  int validate_samples = 2001;

  std::vector<std::string> stages;
  std::string output = "out";
  std::uint64_t seed = 1;

  json raw;  // config as parsed, for the manifest
};

// Parse + schema-check; throws ConfigError with a field-level message.
ScenarioConfig load_config(const std::string& path);
ScenarioConfig parse_config(const json& j);

// Assembled scenario objects (grid owned here; Problem points into it).
struct Scenario {
  std::unique_ptr<Grid> grid;
  ModelFunctions model;
  CostSpec cost;
  AdmissibleSet set;
  InitialDensity rho0;
  ScalarField rho0_grid;
  Problem problem;
};

Scenario build_scenario(const ScenarioConfig& cfg);

// Catalog of analytic field shapes used for rho0, G, G_T.
std::function<double(const std::array<double, 3>&)> make_field(const json& spec, int d,
                                                               const Grid* grid);

// Executes the requested stages, writes the artifact tree + manifest.json
// into out_dir. Returns an exit code (0/2/3).
int run_scenario(const ScenarioConfig& cfg, const std::string& out_dir, std::ostream& log);

// L1/L2 distances between final densities/controls and cost deltas of two
// manifest directories.
json compare_runs(const std::string& manifest_a, const std::string& manifest_b);

}  // namespace fpc
