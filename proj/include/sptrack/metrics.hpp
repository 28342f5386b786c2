#pragma once

#include <optional>
#include <vector>

#include "sptrack/equilibrium.hpp"
#include "sptrack/flow.hpp"

namespace sptrack {

enum class ErrorKind { Joint, Primal, Z };

/// Mean of recorded samples with t > burn_in * T (uniform grid, so this is
/// the time average over the window).
double time_average(const std::vector<double>& series, const std::vector<double>& time, double burn_in);

double average_tracking_error(const TrajectoryRecord& traj, ErrorKind which, double burn_in = 0.1);

/// Time average of the probe series (throughput for NUM runs).
double throughput_average(const TrajectoryRecord& traj, double burn_in = 0.1);

struct DriftReport {
  std::vector<double> V;
  std::vector<double> drift;  // (V[k+1] - V[k]) / dt at k
  std::vector<double> bound;  // -a3 |z_k|^2 + a4 gamma |z_k| |u_k| + tol_k
  long violations = 0;
  double max_excess = 0.0;  // largest drift - bound (negative when all hold)
};

/// Per-interval drift of V against the excitation-inflated decay bound, with
/// tolerance tol_k = 10 dt (a4 / 2) |dz_k / dt|^2, i.e. ten times the
/// second-order remainder of the quadratic V over one step.
DriftReport lyapunov_series(const TrajectoryRecord& traj, const StabilityConstants& c);

struct RunMetrics {
  double avg_err_joint = 0.0;
  double avg_err_primal = 0.0;
  double avg_err_z = 0.0;
  double alpha_sq_measured = 0.0;
  double beta_measured = 0.0;
  std::optional<double> bound_strong;
  std::optional<double> bound_primal;
  std::optional<long> drift_violations;
  std::optional<double> throughput_avg;
  long compensation_fallbacks = 0;
};

/// Bounds are filled only when `constants` is given and `verdict` passes.
RunMetrics compute_run_metrics(const TrajectoryRecord& traj, double burn_in,
                               const StabilityConstants* constants = nullptr,
                               const Verdict* verdict = nullptr, bool audit_drift = false);

struct BoundVerdict {
  bool applicable = false;
  bool holds = false;
  double measured = 0.0;
  double bound = 0.0;
  double slack_ratio = 0.0;  // bound / measured
};

/// Compares avg |z_e|^2 with a4^2 gamma^2 alpha^2 / a3^2.
BoundVerdict bound_report(const RunMetrics& m, const StabilityConstants& c, const Verdict& v);

struct Summary {
  double mean = 0.0;
  double stderr_ = 0.0;
  int n = 0;
};

Summary summarize(const std::vector<double>& xs);

/// Spearman rank correlation (average ranks for ties).
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace sptrack
