#include "sptrack/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sptrack/errors.hpp"

namespace sptrack {

double time_average(const std::vector<double>& series, const std::vector<double>& time, double burn_in) {
  if (series.size() != time.size() || series.empty()) throw ConfigError("time_average: missing series");
  if (!(burn_in >= 0.0 && burn_in < 1.0)) throw ConfigError("time_average: burn-in must lie in [0, 1)");
  const double t0 = time.front() + burn_in * (time.back() - time.front());
  double sum = 0.0;
  long n = 0;
  for (size_t k = 0; k < series.size(); ++k) {
    if (time[k] > t0) {
      sum += series[k];
      ++n;
    }
  }
  if (n == 0) return series.back();
  return sum / static_cast<double>(n);
}

double average_tracking_error(const TrajectoryRecord& traj, ErrorKind which, double burn_in) {
  if (traj.err_joint.empty()) throw ConfigError("average_tracking_error: trajectory has no equilibrium series");
  switch (which) {
    case ErrorKind::Joint:
      return time_average(traj.err_joint, traj.time, burn_in);
    case ErrorKind::Primal:
      return time_average(traj.err_primal, traj.time, burn_in);
    case ErrorKind::Z:
      return time_average(traj.err_z, traj.time, burn_in);
  }
  return 0.0;
}

double throughput_average(const TrajectoryRecord& traj, double burn_in) {
  if (traj.probe.empty()) throw ConfigError("throughput_average: trajectory has no throughput samples");
  return time_average(traj.probe, traj.time, burn_in);
}

DriftReport lyapunov_series(const TrajectoryRecord& traj, const StabilityConstants& c) {
  DriftReport r;
  r.V = traj.lyapunov;
  r.max_excess = -std::numeric_limits<double>::infinity();
  for (size_t k = 0; k + 1 < traj.size(); ++k) {
    const double dt = traj.time[k + 1] - traj.time[k];
    const double drift = (traj.lyapunov[k + 1] - traj.lyapunov[k]) / dt;
    const double z2 = traj.err_z[k];
    const double z = std::sqrt(z2);
    const double tol = 10.0 * dt * 0.5 * c.a4 * traj.dz_sq[k + 1] / (dt * dt) + 1e-12;
    const double bound = -c.a3 * z2 + c.a4 * c.gamma * z * traj.u_rate_norm[k + 1] + tol;
    r.drift.push_back(drift);
    r.bound.push_back(bound);
    r.max_excess = std::max(r.max_excess, drift - bound);
    if (drift > bound) ++r.violations;
  }
  return r;
}

RunMetrics compute_run_metrics(const TrajectoryRecord& traj, double burn_in, const StabilityConstants* constants,
                               const Verdict* verdict, bool audit_drift) {
  RunMetrics m;
  m.avg_err_joint = average_tracking_error(traj, ErrorKind::Joint, burn_in);
  m.avg_err_primal = average_tracking_error(traj, ErrorKind::Primal, burn_in);
  m.avg_err_z = average_tracking_error(traj, ErrorKind::Z, burn_in);
  m.alpha_sq_measured = traj.excitation.count() ? traj.excitation.power() : 0.0;
  m.beta_measured = traj.excitation.count() ? traj.excitation.magnitude() : 0.0;
  m.compensation_fallbacks = traj.compensation_fallbacks;
  if (!traj.probe.empty()) m.throughput_avg = throughput_average(traj, burn_in);
  if (constants && verdict && verdict->pass) {
    const auto b = constants->tracking_bound(m.alpha_sq_measured);
    if (b) {
      m.bound_strong = *b;
      const double a4 = constants->a4, a3 = constants->a3, g0 = constants->gamma0;
      m.bound_primal = a4 * a4 * (g0 * g0 + 1.0) * m.alpha_sq_measured / (a3 * a3);
    }
  }
  if (constants && audit_drift) m.drift_violations = lyapunov_series(traj, *constants).violations;
  return m;
}

BoundVerdict bound_report(const RunMetrics& m, const StabilityConstants& c, const Verdict& v) {
  BoundVerdict out;
  out.measured = m.avg_err_z;
  if (!v.pass) return out;
  const auto b = c.tracking_bound(m.alpha_sq_measured);
  if (!b) return out;
  out.applicable = true;
  out.bound = *b;
  out.holds = m.avg_err_z <= *b;
  out.slack_ratio = m.avg_err_z > 0.0 ? *b / m.avg_err_z : std::numeric_limits<double>::infinity();
  return out;
}

Summary summarize(const std::vector<double>& xs) {
  Summary s;
  s.n = static_cast<int>(xs.size());
  if (xs.empty()) return s;
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / s.n;
  if (s.n > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stderr_ = std::sqrt(ss / (s.n - 1) / s.n);
  }
  return s;
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (size_t i = 0; i < idx.size();) {
    size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("spearman: need two equal-length series");
  const auto rx = ranks(x), ry = ranks(y);
  const Summary sx = summarize(rx), sy = summarize(ry);
  double cov = 0.0, vx = 0.0, vy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    cov += (rx[i] - sx.mean) * (ry[i] - sy.mean);
    vx += (rx[i] - sx.mean) * (rx[i] - sx.mean);
    vy += (ry[i] - sy.mean) * (ry[i] - sy.mean);
  }
  if (vx == 0.0 || vy == 0.0) return 0.0;
  return cov / std::sqrt(vx * vy);
}

}  // namespace sptrack
