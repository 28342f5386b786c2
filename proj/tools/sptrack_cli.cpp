// Command-line driver: run, check and constants subcommands over an
// experiment file.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sptrack/batch.hpp"
#include "sptrack/errors.hpp"
#include "sptrack/experiment.hpp"

namespace {

int print_constants(const sptrack::ExperimentConfig& cfg) {
  using namespace sptrack;
  const ScenarioInstance sc = build_scenario(cfg);
  std::printf("scenario %s  kappa %.6g  draws %d\n", cfg.scenario.c_str(), cfg.integrator.kappa, cfg.draws);
  for (double a : cfg.sweep) {
    const StabilityConstants k = experiment_constants(cfg, sc, a);
    const Verdict v = condition_check(k, cfg.integrator.kappa);
    std::printf("\na = %.6g  (%s case, %d samples, %d failed)\n", a, to_string(k.stability_case), k.samples,
                k.failed_samples);
    std::printf("  M_x %.6g  M_lambda %.6g  M %.6g  lambda_max(A) %.6g\n", k.M_x, k.M_lambda, k.M, k.lambda_max_A);
    std::printf("  sup|phi| %.6g  sup|phi_x| %.6g  sup|phi A| %.6g  sup|phi_x A| %.6g\n", k.phi_sup, k.phi_x_sup,
                k.phi_A_sup, k.phi_x_A_sup);
    std::printf("  a1 %.6g  a2 %.6g  a3 %.6g  a4 %.6g\n", k.a1, k.a2, k.a3, k.a4);
    std::printf("  c1 %.6g  c2 %.6g  c3 %.6g  c4 %.6g\n", k.c1, k.c2, k.c3, k.c4);
    std::printf("  gamma %.6g  alpha^2 %.6g  beta %.6g  L %.6g\n", k.gamma, k.alpha_sq, k.beta, k.lipschitz_L);
    const auto b = k.tracking_bound(k.alpha_sq);
    if (b) std::printf("  tracking bound %.6g\n", *b);
    std::printf("  condition: %s (margin %.6g)\n", v.pass ? "pass" : "fail", v.margin);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Saddle-point tracking experiments"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  int workers = 0;
  long long seed = -1;

  auto* run = app.add_subcommand("run", "Run an experiment and write CSV and plot data");
  run->add_option("config", config_path, "Experiment file")->required();
  run->add_option("--out", out_dir, "Output directory (overrides the config)");
  run->add_option("--workers", workers, "Worker threads");
  run->add_option("--seed", seed, "Master seed (overrides the config)");

  auto* check = app.add_subcommand("check", "Validate an experiment file");
  check->add_option("config", config_path, "Experiment file")->required();

  auto* constants = app.add_subcommand("constants", "Print stability constants and the condition verdict");
  constants->add_option("config", config_path, "Experiment file")->required();
  constants->add_option("--workers", workers, "Worker threads");

  CLI11_PARSE(app, argc, argv);

  try {
    sptrack::ExperimentConfig cfg = sptrack::load_experiment(config_path);
    if (seed >= 0) cfg.master_seed = static_cast<std::uint64_t>(seed);
    if (!out_dir.empty()) cfg.output = out_dir;
    sptrack::set_worker_count(workers);
    if (check->parsed()) {
      sptrack::build_scenario(cfg);
      std::cout << config_path << ": ok (" << cfg.sweep.size() * cfg.modes.size() * cfg.seeds << " runs)\n";
      return 0;
    }
    if (constants->parsed()) return print_constants(cfg);
    const sptrack::ExperimentResult r = sptrack::run_experiment(cfg);
    sptrack::write_results(r, cfg.output);
    const int failed = r.failed_runs();
    std::cout << "wrote " << cfg.output << " (" << r.runs.size() << " runs, " << failed << " failed)\n";
    return failed > 0 ? 2 : 0;
  } catch (const sptrack::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
