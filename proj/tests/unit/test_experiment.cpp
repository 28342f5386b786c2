#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sptrack/errors.hpp"
#include "sptrack/experiment.hpp"
#include "sptrack/keyvalue.hpp"

using namespace sptrack;
namespace fs = std::filesystem;

namespace {

const char* kToy =
    "[experiment]\n"
    "scenario = quad-toy\n"
    "sweep = 0.02, 0.04, 0.06, 0.08, 0.1\n"
    "modes = plain, compensated\n"
    "seeds = 2\n"
    "master_seed = 5\n"
    "[integrator]\n"
    "kappa = 2\n"
    "dt = 0.005\n"
    "horizon = 20\n"
    "stride = 10\n";

ExperimentConfig toy_config() { return parse_experiment(parse_keyvalue(kToy, "toy.ini")); }

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

std::string first_lines(const std::string& text, int n) {
  size_t pos = 0;
  for (int i = 0; i < n && pos != std::string::npos; ++i) {
    pos = text.find('\n', pos);
    if (pos != std::string::npos) ++pos;
  }
  return text.substr(0, pos);
}

std::string golden(const std::string& name) {
  return slurp(fs::path(SPTRACK_SOURCE_DIR) / "tests/unit/golden" / name);
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sptrack_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string error_of(const std::string& text) {
  try {
    parse_experiment(parse_keyvalue(text, "cfg.ini"));
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(KeyValue, Grammar) {
  const KvDocument d = parse_keyvalue("# c\n[a]\nx = 1  # trailing\n; c\n[b]\ny = p, q\n[a]\nx = 2\n", "s");
  ASSERT_EQ(d.sections.size(), 3u);
  EXPECT_EQ(d.find("a")->get_int("x"), 1);
  EXPECT_EQ(d.all("a").size(), 2u);
  EXPECT_EQ(d.find("b")->get_strings("y"), (std::vector<std::string>{"p", "q"}));
  EXPECT_EQ(d.find("a")->find("x")->line, 3);
}

TEST(KeyValue, ErrorsCarryLineAndColumn) {
  auto msg = [](const char* t) {
    try {
      parse_keyvalue(t, "f.ini");
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_EQ(msg("x = 1\n").rfind("f.ini:1:", 0), 0u);
  EXPECT_EQ(msg("[a]\nx = 1\nx = 2\n").rfind("f.ini:3:", 0), 0u);
  EXPECT_EQ(msg("[a]\nnovalue\n").rfind("f.ini:2:", 0), 0u);
  EXPECT_EQ(msg("[a\n").rfind("f.ini:1:", 0), 0u);
}

TEST(ExperimentConfig, ParsesShippedConfigs) {
  for (const char* name : {"quad_toy.ini", "jamming_2x2.ini", "num_3node.ini", "num_3node_20db.ini",
                           "num_multinode.ini"}) {
    const ExperimentConfig c = load_experiment(std::string(SPTRACK_SOURCE_DIR) + "/configs/" + name);
    EXPECT_NO_THROW(c.validate()) << name;
    EXPECT_FALSE(c.sweep.empty());
  }
}

TEST(ExperimentConfig, ErrorsPointAtValue) {
  std::string e = error_of("[experiment]\nscenario = quad-toy\nsweep = 0.1\nseeds = many\n");
  EXPECT_EQ(e.rfind("cfg.ini:4:9:", 0), 0u) << e;
  e = error_of("[experiment]\nscenario = quad-toy\nsweep = 0.1\nmodes = plain, turbo\n");
  EXPECT_EQ(e.rfind("cfg.ini:4:", 0), 0u) << e;
  e = error_of("[experiment]\nscenario = quad-toy\nsweep = 0.1\n[integrator]\nkapa = 1\n");
  EXPECT_EQ(e.rfind("cfg.ini:5:", 0), 0u) << e;
  e = error_of("[experiment]\nscenario = quad-toy\nsweep = 0.1\n[extra]\nx = 1\n");
  EXPECT_EQ(e.rfind("cfg.ini:4:", 0), 0u) << e;
  EXPECT_NE(error_of("[experiment]\nscenario = warp\nsweep = 0.1\n"), "");
  EXPECT_NE(error_of("[experiment]\nscenario = quad-toy\nsweep = -0.1\n"), "");
  EXPECT_NE(error_of("[experiment]\nscenario = quad-toy\nsweep = 0.1\n[integrator]\ndt = 0.1\n"), "");
  EXPECT_NE(error_of("[experiment]\nscenario = num-multinode\nsweep = 0.1\n"), "");
}

TEST(Experiment, OutputIsDeterministicAndThreadIndependent) {
  const ExperimentConfig c = toy_config();
  const fs::path a = scratch("det_a"), b = scratch("det_b"), s = scratch("det_s");
  write_results(run_experiment(c, true), a.string());
  write_results(run_experiment(c, true), b.string());
  write_results(run_experiment(c, false), s.string());
  for (const char* f : {"runs.csv", "aggregates.csv", "error_vs_a.dat"}) {
    const std::string ra = slurp(a / f);
    EXPECT_FALSE(ra.empty()) << f;
    EXPECT_EQ(ra, slurp(b / f)) << f;
    EXPECT_EQ(ra, slurp(s / f)) << f;
  }
  for (const auto& p : {a, b, s}) fs::remove_all(p);
}

TEST(Experiment, SingleSeedRerunIsByteIdentical) {
  ExperimentConfig c = toy_config();
  c.seeds = 1;
  const fs::path a = scratch("one_a"), b = scratch("one_b");
  write_results(run_experiment(c), a.string());
  write_results(run_experiment(c), b.string());
  EXPECT_EQ(slurp(a / "runs.csv"), slurp(b / "runs.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Experiment, CompensatedBelowPlainOnToy) {
  const ExperimentResult r = run_experiment(toy_config());
  EXPECT_EQ(r.failed_runs(), 0);
  for (double a : r.config.sweep) {
    EXPECT_LT(r.headline(*r.find(a, FlowMode::Compensated)).mean, r.headline(*r.find(a, FlowMode::Plain)).mean);
  }
}

TEST(PlotData, ShapeAndGoldenHeaders) {
  const ExperimentResult r = run_experiment(toy_config());
  const fs::path d = scratch("plot");
  write_results(r, d.string());
  const std::string dat = slurp(d / "error_vs_a.dat");
  EXPECT_EQ(first_lines(dat, 1), golden("error_vs_a_header.txt"));
  EXPECT_EQ(first_lines(slurp(d / "runs.csv"), 2), golden("runs_header.txt"));
  EXPECT_EQ(first_lines(slurp(d / "aggregates.csv"), 2), golden("aggregates_header.txt"));
  std::istringstream in(dat);
  std::string line;
  std::getline(in, line);
  int rows = 0;
  while (std::getline(in, line)) {
    std::istringstream cols(line);
    int n = 0;
    std::string tok;
    while (cols >> tok) ++n;
    EXPECT_EQ(n, 5);
    ++rows;
  }
  EXPECT_EQ(rows, 5);
  EXPECT_FALSE(fs::exists(d / "throughput_vs_a.dat"));
  fs::remove_all(d);
}

TEST(PlotData, EmptyModesWritesNothing) {
  ExperimentResult r;
  r.config = toy_config();
  r.config.modes.clear();
  const fs::path d = scratch("empty");
  testing::internal::CaptureStderr();
  const auto written = emit_plotdata(r, d.string());
  const std::string err = testing::internal::GetCapturedStderr();
  EXPECT_TRUE(written.empty());
  EXPECT_NE(err.find("warning"), std::string::npos);
  EXPECT_FALSE(fs::exists(d / "error_vs_a.dat"));
}

TEST(Scenario, NumBuildsPartitionAndProbe) {
  const ExperimentConfig c = load_experiment(std::string(SPTRACK_SOURCE_DIR) + "/configs/num_3node.ini");
  const ScenarioInstance sc = build_scenario(c);
  ASSERT_TRUE(sc.num);
  EXPECT_EQ(sc.problem->dims().n, 3);
  EXPECT_NO_THROW(sc.partition.validate(8));
  const ChannelModel m = channel_for(c, sc, 0.04);
  EXPECT_EQ(m.q(), 2);
  EXPECT_NEAR(m.alpha_sq(), 0.16, 1e-15);
}
