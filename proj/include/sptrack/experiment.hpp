#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sptrack/applications.hpp"
#include "sptrack/channel.hpp"
#include "sptrack/equilibrium.hpp"
#include "sptrack/flow.hpp"
#include "sptrack/keyvalue.hpp"
#include "sptrack/metrics.hpp"

namespace sptrack {

// Experiment files use the grammar of keyvalue.hpp with sections:
//
//   [experiment]  scenario = quad-toy | jamming-2x2 | num-3node | num-multinode
//                 topology (num-multinode; relative to the config file)
//                 sweep = list of fading rates a
//                 modes = list of plain | compensated | distributed-compensated
//                 seeds, master_seed, output
//   [integrator]  kappa, dt, horizon, burn_in, stride, noise_substeps,
//                 h_dot = difference | oracle, phi = iterate | equilibrium,
//                 time_unit = absolute | fading   (fading: dt and horizon are
//                 multiples of 1/a)
//   [channel]     h_bar (real part of every entry), excitation =
//                 normalized | zero | fixed, sigma_u (fixed only)
//   [num]         snr_db, r_min, r_max, admit_tol
//   [jamming]     antennas, p_t, p_j, noise
//   [analysis]    bounds = true|false, draws, drift_audit = true|false

struct ExperimentConfig {
  std::string source = "<memory>";
  std::string scenario = "quad-toy";
  std::string topology;
  std::vector<double> sweep;
  std::vector<FlowMode> modes{FlowMode::Plain};
  int seeds = 1;
  std::uint64_t master_seed = 1;
  std::string output = "results";

  IntegratorConfig integrator;
  double burn_in = 0.1;
  bool fading_time_unit = false;

  double h_bar = 1.0;
  enum class Excite { Normalized, Zero, Fixed } excitation = Excite::Normalized;
  double sigma_u = 0.0;

  double snr_db = 10.0;
  double r_min = -0.5;
  double r_max = 1000.0;
  double admit_tol = 0.0;

  JammingInstance jamming;

  bool bounds = false;
  int draws = 200;
  bool drift_audit = false;

  void validate() const;
};

ExperimentConfig parse_experiment(const KvDocument& doc, const std::string& base_dir = ".");
ExperimentConfig load_experiment(const std::string& path);

struct ScenarioInstance {
  std::shared_ptr<const SaddleProblem> problem;
  std::shared_ptr<const NumProblem> num;
  bool complex_channel = false;
  Partition partition;
};

ScenarioInstance build_scenario(const ExperimentConfig& cfg);
ChannelModel channel_for(const ExperimentConfig& cfg, const ScenarioInstance& sc, double a);
IntegratorConfig integrator_for(const ExperimentConfig& cfg, double a, FlowMode mode);

struct RunTask {
  int a_index = 0;
  int mode_index = 0;
  int seed = 0;
};

struct RunResult {
  RunTask task;
  bool ok = false;
  std::string error;
  RunMetrics metrics;
};

struct Aggregate {
  double a = 0.0;
  FlowMode mode = FlowMode::Plain;
  int runs_ok = 0;
  int runs_failed = 0;
  Summary err_joint, err_primal, err_z, throughput;
  bool has_throughput = false;
};

struct ExperimentResult {
  ExperimentConfig config;
  bool strong = true;
  std::vector<RunResult> runs;                               // (a, mode, seed) order
  std::vector<Aggregate> aggregates;                         // (a, mode) order
  std::vector<std::optional<StabilityConstants>> constants;  // per a
  std::vector<std::optional<Verdict>> verdicts;              // per a

  int failed_runs() const;
  /// Headline tracking error of an aggregate: joint (strong) or primal.
  const Summary& headline(const Aggregate& g) const { return strong ? g.err_joint : g.err_primal; }
  const Aggregate* find(double a, FlowMode mode) const;
};

/// Every (a, mode, seed) run. Seed s always uses stream s of the master seed,
/// so modes and fading rates share noise paths and results do not depend on
/// the worker count.
ExperimentResult run_experiment(const ExperimentConfig& cfg, bool parallel = true);

/// Constants at one fading rate from `cfg.draws` stationary draws.
StabilityConstants experiment_constants(const ExperimentConfig& cfg, const ScenarioInstance& sc, double a);

/// runs.csv, aggregates.csv, constants.csv (when computed) and plot data.
void write_results(const ExperimentResult& r, const std::string& dir);

/// error_vs_a.dat and (NUM) throughput_vs_a.dat. Returns written paths;
/// writes nothing and warns on stderr when there are no aggregates.
std::vector<std::string> emit_plotdata(const ExperimentResult& r, const std::string& dir);

}  // namespace sptrack
