#include <benchmark/benchmark.h>

#include "sptrack/applications.hpp"
#include "sptrack/batch.hpp"
#include "sptrack/experiment.hpp"

using namespace sptrack;

namespace {

struct NumDraws {
  std::shared_ptr<const NumProblem> problem = make_num(num_3node(10.0), "num-3node");
  ChannelModel model = ChannelModel::normalized_fading(0.04, Eigen::VectorXd::Ones(2));
  std::vector<ParameterVector> hs;
  explicit NumDraws(int n) : hs(draw_parameters(model, n, 17)) {}
};

struct JamDraws {
  std::shared_ptr<const JammingGame> problem = make_jamming();
  ChannelModel model = ChannelModel::normalized_fading(0.02, Eigen::VectorXd::Ones(16), true);
  std::vector<ParameterVector> hs;
  explicit JamDraws(int n) : hs(draw_parameters(model, n, 18)) {}
};

void BM_NumSensitivitySerial(benchmark::State& st) {
  const NumDraws d(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(sample_sensitivities_serial(*d.problem, d.model, d.hs));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_NumSensitivityParallel(benchmark::State& st) {
  const NumDraws d(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(sample_sensitivities(*d.problem, d.model, d.hs));
  st.SetItemsProcessed(st.iterations() * st.range(0));
  st.counters["threads"] = worker_count();
}

void BM_JammingSensitivitySerial(benchmark::State& st) {
  const JamDraws d(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(sample_sensitivities_serial(*d.problem, d.model, d.hs));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_JammingSensitivityParallel(benchmark::State& st) {
  const JamDraws d(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(sample_sensitivities(*d.problem, d.model, d.hs));
  st.SetItemsProcessed(st.iterations() * st.range(0));
  st.counters["threads"] = worker_count();
}

ExperimentConfig toy_batch(FlowMode mode) {
  ExperimentConfig c;
  c.scenario = "quad-toy";
  c.sweep = {0.02, 0.04};
  c.modes = {mode};
  c.seeds = 8;
  c.integrator.kappa = 2.0;
  c.integrator.dt = 0.005;
  c.integrator.horizon = 200.0;
  c.integrator.stride = 10;
  return c;
}

void BM_ToyTrajectoryBatch(benchmark::State& st) {
  const ExperimentConfig c = toy_batch(st.range(1) ? FlowMode::Compensated : FlowMode::Plain);
  const bool parallel = st.range(0) != 0;
  for (auto _ : st) benchmark::DoNotOptimize(run_experiment(c, parallel));
  st.SetLabel(std::string(parallel ? "parallel " : "serial ") + (st.range(1) ? "compensated" : "plain"));
}

void BM_NumTrajectoryBatch(benchmark::State& st) {
  ExperimentConfig c;
  c.scenario = "num-3node";
  c.sweep = {0.04};
  c.modes = {FlowMode::Plain, FlowMode::Compensated, FlowMode::DistributedCompensated};
  c.seeds = 4;
  c.integrator.kappa = 0.5;
  c.integrator.dt = 0.02;
  c.integrator.horizon = 200.0;
  c.integrator.stride = 10;
  c.admit_tol = 0.05;
  const bool parallel = st.range(0) != 0;
  for (auto _ : st) benchmark::DoNotOptimize(run_experiment(c, parallel));
  st.SetLabel(parallel ? "parallel" : "serial");
}

}  // namespace

BENCHMARK(BM_NumSensitivitySerial)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NumSensitivityParallel)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_JammingSensitivitySerial)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_JammingSensitivityParallel)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ToyTrajectoryBatch)->Args({0, 0})->Args({1, 0})->Args({0, 1})->Args({1, 1})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NumTrajectoryBatch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
