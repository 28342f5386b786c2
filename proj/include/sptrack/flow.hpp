#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "sptrack/channel.hpp"
#include "sptrack/problem.hpp"

namespace sptrack {

enum class FlowMode { Plain, Compensated, DistributedCompensated };
/// Where compensation reads h-dot from: backward difference of observed h, or
/// the simulator's drift plus noise rate.
enum class HDotSource { FiniteDifference, Oracle };
/// Where the sensitivity used for compensation is evaluated.
enum class PhiSource { Iterate, Equilibrium };

const char* to_string(FlowMode m);
FlowMode parse_flow_mode(const std::string& s);

/// Groups of stacked (x, lambda) indices for block-diagonal compensation.
struct Partition {
  std::vector<std::vector<int>> groups;

  static Partition single(int total);
  void validate(int total) const;
};

struct IntegratorConfig {
  double kappa = 1.0;
  double dt = 1e-3;
  double horizon = 1.0;
  FlowMode mode = FlowMode::Plain;
  HDotSource h_dot = HDotSource::FiniteDifference;
  PhiSource phi_source = PhiSource::Iterate;
  /// Ground-truth saddle points (and all recorded series) every `stride` steps.
  int stride = 1;
  int noise_substeps = 1;
  double solve_tol = 1e-10;
  bool record_vectors = false;

  void validate() const;
  long steps() const;
};

JointState pd_step(const SaddleProblem& p, const JointState& s, const ParameterVector& h,
                   const IntegratorConfig& cfg, long step = -1);

/// Plain step with drift kappa dL/dx + phi_x h_dot and dual direction
/// -kappa dL/dlambda + phi_lambda h_dot (before the positive projection).
JointState compensated_step(const SaddleProblem& p, const JointState& s, const ChannelState& ch,
                            const Mat& phi_hat, const IntegratorConfig& cfg, long step = -1);

struct StepDiagnostics {
  int fallback_groups = 0;
};

/// Compensation with phi_g = -B_gg^{-1} K_g per partition group, each using
/// only its own diagonal block. Singular blocks get zero compensation.
JointState distributed_compensated_step(const SaddleProblem& p, const JointState& s,
                                        const ChannelState& ch, const Partition& partition,
                                        const IntegratorConfig& cfg, StepDiagnostics* diag = nullptr,
                                        long step = -1);

/// Block-diagonal sensitivity assembled from per-group solves.
Mat distributed_phi(const SaddleProblem& p, const JointState& s, const ParameterVector& h,
                    const Partition& partition, StepDiagnostics* diag = nullptr);

using StateProbe = std::function<double(const JointState&, const ParameterVector&)>;

struct TrajectoryOptions {
  /// Defaults to a draw from the channel's stationary distribution.
  std::optional<ParameterVector> initial_h;
  /// Defaults to the saddle point at the initial h.
  std::optional<JointState> initial_state;
  /// Needed for DistributedCompensated; defaults to a single group.
  std::optional<Partition> partition;
  /// Scalar evaluated at every recorded point (e.g. throughput).
  StateProbe probe;
};

/// Series sampled every `stride` steps. Index 0 is the initial point. The
/// increment series (u_rate_norm, dz_sq) at index k describe the interval
/// from k-1 to k.
struct TrajectoryRecord {
  bool strong = true;
  double kappa = 1.0;
  double dt = 0.0;         // integrator step
  double dt_record = 0.0;  // spacing of recorded points
  std::vector<double> time;
  std::vector<double> err_joint;
  std::vector<double> err_primal;
  std::vector<double> err_z;
  std::vector<double> lyapunov;
  std::vector<double> u_rate_norm;
  std::vector<double> dz_sq;
  std::vector<double> probe;
  std::vector<JointState> states;
  std::vector<ParameterVector> h;
  std::vector<JointState> equilibria;
  ExcitationAccumulator excitation;
  long compensation_fallbacks = 0;
  long steps = 0;

  size_t size() const { return time.size(); }
};

TrajectoryRecord run_trajectory(const SaddleProblem& p, const ChannelModel& model,
                                const IntegratorConfig& cfg, RngStream rng,
                                const TrajectoryOptions& opts = {});

}  // namespace sptrack
