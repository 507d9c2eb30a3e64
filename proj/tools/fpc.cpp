#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>

#include "fpc/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Nonlinear Fokker-Planck optimal control toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::vector<std::string> stage_override;
  int threads = 0;

  auto* run = app.add_subcommand("run", "run the stages of a scenario config");
  run->add_option("config", config_path, "scenario config (json)")->required();
  run->add_option("--out", out_dir, "output directory (default: config 'output', or $FPC_OUT)");
  run->add_option("--stages", stage_override, "override the stage list")->delimiter(',');
  run->add_option("--threads", threads, "Eigen thread count (0: default)");

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient check only");
  gradcheck->add_option("config", config_path, "scenario config (json)")->required();
  gradcheck->add_option("--out", out_dir, "output directory");

  std::string manifest_a, manifest_b;
  auto* compare = app.add_subcommand("compare", "diff two run manifests");
  compare->add_option("a", manifest_a, "first manifest.json")->required();
  compare->add_option("b", manifest_b, "second manifest.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : fpc::kExitConfig;
  }

  try {
    if (compare->parsed()) {
      std::cout << fpc::compare_runs(manifest_a, manifest_b).dump(2) << "\n";
      return fpc::kExitOk;
    }

    fpc::ScenarioConfig cfg = fpc::load_config(config_path);
    if (gradcheck->parsed()) stage_override = {"gradcheck"};
    if (!stage_override.empty()) cfg.stages = stage_override;
    if (threads > 0) Eigen::setNbThreads(threads);

    if (out_dir.empty()) {
      if (const char* env = std::getenv("FPC_OUT")) out_dir = std::string(env) + "/" + cfg.output;
      else out_dir = cfg.output;
    }
    return fpc::run_scenario(cfg, out_dir, std::cerr);
  } catch (const fpc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return fpc::kExitConfig;
  } catch (const fpc::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return fpc::kExitNumerical;
  }
}
