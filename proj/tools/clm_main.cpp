// Command-line harness for coupled-local-minimizer experiments.
//
//   clm run <config.json>        one CLM run: trace.csv, summary.json, best.xyz
//   clm bench <config.json>      CLM vs multistart from identical starts
//   clm gradcheck                finite-difference check of every registered problem
//
// Output goes to $CLM_OUTPUT_ROOT/<output_dir> unless --out overrides it.

#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "clm/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitBadConfig = 2;
constexpr int kExitNumericalFailure = 3;

int cmd_run(const std::string& config_path, const std::string& out_override) {
  clm::ExperimentConfig cfg;
  try {
    cfg = clm::load_config_file(config_path);
  } catch (const std::exception& e) {
    std::cerr << "clm run: invalid config: " << e.what() << "\n";
    return kExitBadConfig;
  }
  const auto dir = clm::resolve_output_dir(cfg, out_override);
  try {
    const auto outcome = clm::run_experiment(cfg);
    clm::write_outputs(outcome, dir);
    std::cout << "problem " << outcome.built.problem.name << ": best cost "
              << outcome.best_cost_base() << " after " << outcome.run.trace.windows.size()
              << " windows (" << outcome.wall_seconds << " s)\n"
              << "outputs in " << dir.string() << "\n";
    return kExitOk;
  } catch (const clm::RunFailure& e) {
    std::filesystem::create_directories(dir);
    clm::write_trace_csv((dir / "trace.csv").string(), e.partial, cfg.clm.q);
    std::cerr << "clm run: numerical failure: " << e.what() << " (partial trace flushed to "
              << (dir / "trace.csv").string() << ")\n";
    return kExitNumericalFailure;
  } catch (const std::exception& e) {
    std::cerr << "clm run: " << e.what() << "\n";
    return kExitNumericalFailure;
  }
}

int cmd_bench(const std::string& config_path, int seeds, const std::string& out_override) {
  clm::ExperimentConfig cfg;
  try {
    cfg = clm::load_config_file(config_path);
  } catch (const std::exception& e) {
    std::cerr << "clm bench: invalid config: " << e.what() << "\n";
    return kExitBadConfig;
  }
  const auto dir = clm::resolve_output_dir(cfg, out_override);
  try {
    const auto result = clm::bench_experiment(cfg, seeds);
    clm::write_bench_outputs(result, dir);
    std::cout << "seeds: " << seeds << "\n"
              << "CLM <= multistart best on " << result.clm_wins_vs_multistart << "/" << seeds
              << " seeds\n"
              << "CLM <= quasi-Newton best on " << result.clm_wins_vs_quasi_newton << "/" << seeds
              << " seeds\n"
              << "outputs in " << dir.string() << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "clm bench: " << e.what() << "\n";
    return kExitNumericalFailure;
  }
}

int cmd_gradcheck() {
  const auto report = clm::run_gradcheck(clm::gradcheck_registry());
  for (const auto& entry : report.entries) {
    std::cout << (entry.pass ? "PASS" : "FAIL") << "  " << entry.name
              << "  worst relative error " << entry.worst_rel_error << "\n";
  }
  return report.all_pass ? kExitOk : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coupled local minimizers"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  int seeds = 20;

  auto* run = app.add_subcommand("run", "run one CLM experiment from a config file");
  run->add_option("config", config_path, "experiment config (JSON)")->required();
  run->add_option("--out", out_override, "output directory override");

  auto* bench = app.add_subcommand("bench", "compare CLM against multistart baselines");
  bench->add_option("config", config_path, "experiment config (JSON)")->required();
  bench->add_option("--seeds", seeds, "number of seeds to benchmark");
  bench->add_option("--out", out_override, "output directory override");

  auto* gradcheck = app.add_subcommand("gradcheck", "verify analytic gradients");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitBadConfig;
  }

  if (run->parsed()) return cmd_run(config_path, out_override);
  if (bench->parsed()) return cmd_bench(config_path, seeds, out_override);
  if (gradcheck->parsed()) return cmd_gradcheck();
  return kExitBadConfig;
}
