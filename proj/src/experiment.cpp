#include "sptrack/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "sptrack/batch.hpp"
#include "sptrack/errors.hpp"
#include "sptrack/topology.hpp"

namespace sptrack {

namespace fs = std::filesystem;

void ExperimentConfig::validate() const {
  static const std::vector<std::string> known{"quad-toy", "jamming-2x2", "num-3node", "num-multinode"};
  if (std::find(known.begin(), known.end(), scenario) == known.end())
    throw ConfigError(source + ": unknown scenario '" + scenario + "'");
  if (scenario == "num-multinode" && topology.empty())
    throw ConfigError(source + ": num-multinode needs a topology file");
  if (sweep.empty()) throw ConfigError(source + ": empty sweep");
  if (modes.empty()) throw ConfigError(source + ": no modes");
  if (seeds < 1) throw ConfigError(source + ": seeds must be >= 1");
  if (!(burn_in >= 0.0 && burn_in < 1.0)) throw ConfigError(source + ": burn_in must lie in [0, 1)");
  if (draws < 1) throw ConfigError(source + ": draws must be >= 1");
  for (double a : sweep) {
    if (!(a > 0.0)) throw ConfigError(source + ": fading rates must be positive");
    const IntegratorConfig ic = integrator_for(*this, a, modes.front());
    ic.validate();
    if (ic.dt * std::max(a, ic.kappa) > 1e-2 + 1e-15)
      throw ConfigError(source + ": dt * max(a, kappa) exceeds 1e-2 at a = " + std::to_string(a));
  }
}

ExperimentConfig parse_experiment(const KvDocument& doc, const std::string& base_dir) {
  doc.require_known({"experiment", "integrator", "channel", "num", "jamming", "analysis"});
  for (const auto& s : doc.sections)
    if (doc.all(s.name).size() > 1) throw ConfigError(located(doc.source, s.line, 1, "repeated section [" + s.name + "]"));
  ExperimentConfig c;
  c.source = doc.source;
  const KvSection* ex = doc.find("experiment");
  if (!ex) throw ConfigError(located(doc.source, 1, 1, "missing [experiment] section"));
  ex->require_known({"scenario", "topology", "sweep", "modes", "seeds", "master_seed", "output"});
  c.scenario = ex->get_string("scenario");
  if (ex->has("topology")) {
    fs::path t(ex->get_string("topology"));
    if (t.is_relative()) t = fs::path(base_dir) / t;
    c.topology = t.lexically_normal().string();
  }
  c.sweep = ex->get_doubles("sweep");
  if (ex->has("modes")) {
    c.modes.clear();
    for (const auto& m : ex->get_strings("modes")) {
      try {
        const FlowMode fm = parse_flow_mode(m);
        if (std::find(c.modes.begin(), c.modes.end(), fm) == c.modes.end()) c.modes.push_back(fm);
      } catch (const ConfigError& e) {
        ex->fail(*ex->find("modes"), e.what());
      }
    }
  }
  c.seeds = static_cast<int>(ex->get_int("seeds", 1));
  c.master_seed = static_cast<std::uint64_t>(ex->get_int("master_seed", 1));
  c.output = ex->get_string("output", c.output);

  if (const KvSection* s = doc.find("integrator")) {
    s->require_known({"kappa", "dt", "horizon", "burn_in", "stride", "noise_substeps", "h_dot", "phi", "time_unit"});
    IntegratorConfig& ic = c.integrator;
    ic.kappa = s->get_double("kappa", ic.kappa);
    ic.dt = s->get_double("dt", ic.dt);
    ic.horizon = s->get_double("horizon", ic.horizon);
    c.burn_in = s->get_double("burn_in", c.burn_in);
    ic.stride = static_cast<int>(s->get_int("stride", ic.stride));
    ic.noise_substeps = static_cast<int>(s->get_int("noise_substeps", ic.noise_substeps));
    const std::string hd = s->get_string("h_dot", "difference");
    if (hd == "difference") ic.h_dot = HDotSource::FiniteDifference;
    else if (hd == "oracle") ic.h_dot = HDotSource::Oracle;
    else s->fail(*s->find("h_dot"), "expected 'difference' or 'oracle'");
    const std::string ph = s->get_string("phi", "iterate");
    if (ph == "iterate") ic.phi_source = PhiSource::Iterate;
    else if (ph == "equilibrium") ic.phi_source = PhiSource::Equilibrium;
    else s->fail(*s->find("phi"), "expected 'iterate' or 'equilibrium'");
    const std::string tu = s->get_string("time_unit", "absolute");
    if (tu == "absolute") c.fading_time_unit = false;
    else if (tu == "fading") c.fading_time_unit = true;
    else s->fail(*s->find("time_unit"), "expected 'absolute' or 'fading'");
  }
  if (const KvSection* s = doc.find("channel")) {
    s->require_known({"h_bar", "excitation", "sigma_u"});
    c.h_bar = s->get_double("h_bar", c.h_bar);
    const std::string e = s->get_string("excitation", "normalized");
    if (e == "normalized") c.excitation = ExperimentConfig::Excite::Normalized;
    else if (e == "zero") c.excitation = ExperimentConfig::Excite::Zero;
    else if (e == "fixed") c.excitation = ExperimentConfig::Excite::Fixed;
    else s->fail(*s->find("excitation"), "expected 'normalized', 'zero' or 'fixed'");
    if (c.excitation == ExperimentConfig::Excite::Fixed) {
      c.sigma_u = s->get_double("sigma_u");
      if (!(c.sigma_u >= 0.0)) s->fail(*s->find("sigma_u"), "must be nonnegative");
    }
  }
  if (const KvSection* s = doc.find("num")) {
    s->require_known({"snr_db", "r_min", "r_max", "admit_tol"});
    c.snr_db = s->get_double("snr_db", c.snr_db);
    c.r_min = s->get_double("r_min", c.r_min);
    c.r_max = s->get_double("r_max", c.r_max);
    c.admit_tol = s->get_double("admit_tol", c.admit_tol);
  }
  if (const KvSection* s = doc.find("jamming")) {
    s->require_known({"antennas", "p_t", "p_j", "noise"});
    c.jamming.antennas = static_cast<int>(s->get_int("antennas", c.jamming.antennas));
    c.jamming.p_t = s->get_double("p_t", c.jamming.p_t);
    c.jamming.p_j = s->get_double("p_j", c.jamming.p_j);
    c.jamming.noise = s->get_double("noise", c.jamming.noise);
    c.jamming.validate();
  }
  if (const KvSection* s = doc.find("analysis")) {
    s->require_known({"bounds", "draws", "drift_audit"});
    c.bounds = s->get_bool("bounds", c.bounds);
    c.draws = static_cast<int>(s->get_int("draws", c.draws));
    c.drift_audit = s->get_bool("drift_audit", c.drift_audit);
  }
  c.validate();
  return c;
}

ExperimentConfig load_experiment(const std::string& path) {
  const fs::path p(path);
  return parse_experiment(load_keyvalue(path), p.has_parent_path() ? p.parent_path().string() : ".");
}

namespace {

double mean_sq_gain(const ExperimentConfig& cfg) {
  // Stationary variance is 1 per entry under normalized fading.
  const double var = cfg.excitation == ExperimentConfig::Excite::Zero ? 0.0 : 1.0;
  return cfg.h_bar * cfg.h_bar + var;
}

}  // namespace

ScenarioInstance build_scenario(const ExperimentConfig& cfg) {
  ScenarioInstance sc;
  if (cfg.scenario == "quad-toy") {
    sc.problem = make_quad_toy();
  } else if (cfg.scenario == "jamming-2x2") {
    sc.problem = make_jamming(cfg.jamming);
    sc.complex_channel = true;
  } else if (cfg.scenario == "num-3node" || cfg.scenario == "num-multinode") {
    NumInstance inst;
    if (cfg.scenario == "num-3node") {
      inst = num_3node(cfg.snr_db, mean_sq_gain(cfg));
      inst.r_min = cfg.r_min;
      inst.r_max = cfg.r_max;
      inst.admit_tol = cfg.admit_tol;
    } else {
      TopologyDefaults d;
      d.snr_db = cfg.snr_db;
      d.mean_sq_gain = mean_sq_gain(cfg);
      d.r_min = cfg.r_min;
      d.r_max = cfg.r_max;
      d.admit_tol = cfg.admit_tol;
      inst = load_topology(cfg.topology, d);
    }
    sc.num = make_num(inst, cfg.scenario);
    sc.problem = sc.num;
  } else {
    throw ConfigError("unknown scenario '" + cfg.scenario + "'");
  }
  const Dimensions d = sc.problem->dims();
  sc.partition = sc.num ? sc.num->node_partition() : Partition::single(d.n + d.m);
  sc.partition.validate(d.n + d.m);
  return sc;
}

ChannelModel channel_for(const ExperimentConfig& cfg, const ScenarioInstance& sc, double a) {
  const int q = sc.problem->dims().q;
  Vec hb = Vec::Constant(q, cfg.h_bar);
  if (sc.complex_channel) hb.tail(q / 2).setZero();
  switch (cfg.excitation) {
    case ExperimentConfig::Excite::Normalized:
      return ChannelModel::normalized_fading(a, hb, sc.complex_channel);
    case ExperimentConfig::Excite::Zero:
      return ChannelModel::isotropic(a, hb, Excitation::zero(), sc.complex_channel);
    case ExperimentConfig::Excite::Fixed:
      return ChannelModel::isotropic(a, hb, Excitation::white(cfg.sigma_u), sc.complex_channel);
  }
  throw ConfigError("unknown excitation");
}

IntegratorConfig integrator_for(const ExperimentConfig& cfg, double a, FlowMode mode) {
  IntegratorConfig ic = cfg.integrator;
  ic.mode = mode;
  if (cfg.fading_time_unit) {
    ic.dt /= a;
    ic.horizon /= a;
  }
  return ic;
}

int ExperimentResult::failed_runs() const {
  return static_cast<int>(std::count_if(runs.begin(), runs.end(), [](const RunResult& r) { return !r.ok; }));
}

const Aggregate* ExperimentResult::find(double a, FlowMode mode) const {
  for (const auto& g : aggregates)
    if (g.a == a && g.mode == mode) return &g;
  return nullptr;
}

StabilityConstants experiment_constants(const ExperimentConfig& cfg, const ScenarioInstance& sc, double a) {
  const ChannelModel model = channel_for(cfg, sc, a);
  const auto hs = draw_parameters(model, cfg.draws, cfg.master_seed);
  return stability_constants(*sc.problem, model, cfg.integrator.kappa, hs);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, bool parallel) {
  cfg.validate();
  const ScenarioInstance sc = build_scenario(cfg);
  ExperimentResult out;
  out.config = cfg;
  out.strong = sc.problem->strong();
  const size_t A = cfg.sweep.size(), Mo = cfg.modes.size(), S = static_cast<size_t>(cfg.seeds);

  out.constants.resize(A);
  out.verdicts.resize(A);
  if (cfg.bounds || cfg.drift_audit) {
    for (size_t i = 0; i < A; ++i) {
      try {
        out.constants[i] = experiment_constants(cfg, sc, cfg.sweep[i]);
        out.verdicts[i] = condition_check(*out.constants[i], cfg.integrator.kappa);
      } catch (const std::exception& e) {
        std::cerr << "warning: constants at a = " << cfg.sweep[i] << " unavailable: " << e.what() << "\n";
      }
    }
  }

  out.runs.resize(A * Mo * S);
  auto body = [&](size_t idx) {
    RunResult& r = out.runs[idx];
    r.task.a_index = static_cast<int>(idx / (Mo * S));
    r.task.mode_index = static_cast<int>((idx / S) % Mo);
    r.task.seed = static_cast<int>(idx % S);
    const double a = cfg.sweep[r.task.a_index];
    try {
      const ChannelModel model = channel_for(cfg, sc, a);
      const IntegratorConfig ic = integrator_for(cfg, a, cfg.modes[r.task.mode_index]);
      TrajectoryOptions opts;
      opts.partition = sc.partition;
      if (sc.num) {
        const NumInstance* inst = &sc.num->instance();
        opts.probe = [inst](const JointState& s, const ParameterVector& h) { return throughput(*inst, s.primal, h); };
      }
      const TrajectoryRecord rec = run_trajectory(*sc.problem, model, ic, RngStream(cfg.master_seed, r.task.seed), opts);
      const auto& k = out.constants[r.task.a_index];
      const auto& v = out.verdicts[r.task.a_index];
      r.metrics = compute_run_metrics(rec, cfg.burn_in, k ? &*k : nullptr, v ? &*v : nullptr, cfg.drift_audit && k);
      r.ok = true;
    } catch (const std::exception& e) {
      r.ok = false;
      r.error = e.what();
    }
  };
  if (parallel)
    parallel_for_index(out.runs.size(), body);
  else
    serial_for_index(out.runs.size(), body);

  for (size_t i = 0; i < A; ++i)
    for (size_t m = 0; m < Mo; ++m) {
      Aggregate g;
      g.a = cfg.sweep[i];
      g.mode = cfg.modes[m];
      std::vector<double> ej, ep, ez, th;
      for (size_t s = 0; s < S; ++s) {
        const RunResult& r = out.runs[(i * Mo + m) * S + s];
        if (!r.ok) {
          ++g.runs_failed;
          continue;
        }
        ++g.runs_ok;
        ej.push_back(r.metrics.avg_err_joint);
        ep.push_back(r.metrics.avg_err_primal);
        ez.push_back(r.metrics.avg_err_z);
        if (r.metrics.throughput_avg) th.push_back(*r.metrics.throughput_avg);
      }
      g.err_joint = summarize(ej);
      g.err_primal = summarize(ep);
      g.err_z = summarize(ez);
      g.has_throughput = !th.empty();
      g.throughput = summarize(th);
      out.aggregates.push_back(g);
    }
  return out;
}

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string opt(const std::optional<double>& v) { return v ? num(*v) : ""; }

std::string csv_escape(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += (c == '\n' ? ' ' : c);
  }
  return out + "\"";
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + p.string());
  return f;
}

}  // namespace

void write_results(const ExperimentResult& r, const std::string& dir) {
  fs::create_directories(dir);
  const ExperimentConfig& c = r.config;
  {
    std::ofstream f = open_out(fs::path(dir) / "runs.csv");
    f << "# sptrack runs schema 1\n";
    f << "a,mode,seed,status,avg_err_joint,avg_err_primal,avg_err_z,alpha_sq,beta,throughput,"
         "bound_strong,bound_primal,drift_violations,compensation_fallbacks,error\n";
    for (const auto& run : r.runs) {
      const RunMetrics& m = run.metrics;
      f << num(c.sweep[run.task.a_index]) << ',' << to_string(c.modes[run.task.mode_index]) << ','
        << run.task.seed << ',' << (run.ok ? "ok" : "failed") << ',';
      if (run.ok) {
        f << num(m.avg_err_joint) << ',' << num(m.avg_err_primal) << ',' << num(m.avg_err_z) << ','
          << num(m.alpha_sq_measured) << ',' << num(m.beta_measured) << ',' << opt(m.throughput_avg) << ','
          << opt(m.bound_strong) << ',' << opt(m.bound_primal) << ','
          << (m.drift_violations ? std::to_string(*m.drift_violations) : "") << ',' << m.compensation_fallbacks
          << ",\n";
      } else {
        f << ",,,,,,,,,," << csv_escape(run.error) << '\n';
      }
    }
  }
  {
    std::ofstream f = open_out(fs::path(dir) / "aggregates.csv");
    f << "# sptrack aggregates schema 1\n";
    f << "a,mode,runs_ok,runs_failed,err_joint_mean,err_joint_se,err_primal_mean,err_primal_se,"
         "err_z_mean,err_z_se,throughput_mean,throughput_se\n";
    for (const auto& g : r.aggregates) {
      f << num(g.a) << ',' << to_string(g.mode) << ',' << g.runs_ok << ',' << g.runs_failed << ','
        << num(g.err_joint.mean) << ',' << num(g.err_joint.stderr_) << ',' << num(g.err_primal.mean) << ','
        << num(g.err_primal.stderr_) << ',' << num(g.err_z.mean) << ',' << num(g.err_z.stderr_) << ',';
      if (g.has_throughput)
        f << num(g.throughput.mean) << ',' << num(g.throughput.stderr_) << '\n';
      else
        f << ",\n";
    }
  }
  bool any = false;
  for (const auto& k : r.constants) any = any || k.has_value();
  if (any) {
    std::ofstream f = open_out(fs::path(dir) / "constants.csv");
    f << "# sptrack constants schema 1\n";
    f << "a,case,samples,M_x,M_lambda,phi_sup,phi_x_sup,phi_A_sup,a1,a2,a3,a4,c1,c2,c3,c4,gamma,alpha_sq,beta,"
         "lipschitz_L,condition_margin,condition_pass\n";
    for (size_t i = 0; i < r.constants.size(); ++i) {
      if (!r.constants[i]) continue;
      const StabilityConstants& k = *r.constants[i];
      const Verdict& v = *r.verdicts[i];
      f << num(c.sweep[i]) << ',' << to_string(k.stability_case) << ',' << k.samples << ',' << num(k.M_x) << ','
        << num(k.M_lambda) << ',' << num(k.phi_sup) << ',' << num(k.phi_x_sup) << ',' << num(k.phi_A_sup) << ','
        << num(k.a1) << ',' << num(k.a2) << ',' << num(k.a3) << ',' << num(k.a4) << ',' << num(k.c1) << ','
        << num(k.c2) << ',' << num(k.c3) << ',' << num(k.c4) << ',' << num(k.gamma) << ',' << num(k.alpha_sq)
        << ',' << num(k.beta) << ',' << num(k.lipschitz_L) << ',' << num(v.margin) << ','
        << (v.pass ? "pass" : "fail") << '\n';
    }
  }
  emit_plotdata(r, dir);
}

std::vector<std::string> emit_plotdata(const ExperimentResult& r, const std::string& dir) {
  std::vector<std::string> written;
  if (r.aggregates.empty() || r.config.modes.empty()) {
    std::cerr << "warning: no aggregates, plot data not written\n";
    return written;
  }
  fs::create_directories(dir);
  auto write = [&](const std::string& file, bool throughput) {
    const fs::path p = fs::path(dir) / file;
    std::ofstream f = open_out(p);
    f << "# a";
    for (FlowMode m : r.config.modes) f << ' ' << to_string(m) << "_mean " << to_string(m) << "_se";
    f << '\n';
    for (double a : r.config.sweep) {
      f << num(a);
      for (FlowMode m : r.config.modes) {
        const Aggregate* g = r.find(a, m);
        const Summary& s = throughput ? g->throughput : r.headline(*g);
        f << ' ' << num(s.mean) << ' ' << num(s.stderr_);
      }
      f << '\n';
    }
    written.push_back(p.string());
  };
  write("error_vs_a.dat", false);
  bool has_tp = false;
  for (const auto& g : r.aggregates) has_tp = has_tp || g.has_throughput;
  if (has_tp) write("throughput_vs_a.dat", true);
  return written;
}

}  // namespace sptrack
