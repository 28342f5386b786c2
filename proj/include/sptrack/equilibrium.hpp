#pragma once

#include <optional>
#include <vector>

#include "sptrack/channel.hpp"
#include "sptrack/problem.hpp"

namespace sptrack {

struct EquilibriumSolve {
  JointState x_star;
  double residual_norm = 0.0;
  long iterations = 0;
  bool converged = false;
};

/// Saddle point at frozen h: projected primal-dual flow interleaved with
/// semi-smooth Newton steps on the natural residual. Convergence is declared
/// on ||equilibrium_residual|| < tol.
EquilibriumSolve solve_saddle_frozen(const SaddleProblem& p, const ParameterVector& h, double tol,
                                     long max_iter, const JointState* warm_start = nullptr);

struct SensitivityJacobian {
  Mat phi;     // (n+m) x q
  Mat phi_x;   // top n rows
  double norm = 0.0;    // spectral norm of phi
  double norm_x = 0.0;  // spectral norm of phi_x
  double cond_B = 0.0;
};

double spectral_norm(const Mat& M);

/// phi = -B^{-1} K at a converged saddle point. Throws SingularJacobianError
/// when cond(B) > 1e10.
SensitivityJacobian ift_jacobian(const SaddleProblem& p, const EquilibriumSolve& eq,
                                 const ParameterVector& h);

/// Same formula evaluated at an arbitrary iterate. Empty when B is singular,
/// which callers treat as "no compensation".
std::optional<SensitivityJacobian> estimate_phi_hat(const SaddleProblem& p, const JointState& s,
                                                    const ParameterVector& h);

/// Fast path of estimate_phi_hat without norms or condition numbers.
std::optional<Mat> phi_hat_matrix(const SaddleProblem& p, const JointState& s, const ParameterVector& h);

/// Solve B_g phi_g = -K_g on one index group of a residual Jacobian.
std::optional<Mat> block_phi(const ResidualJacobian& J, const std::vector<int>& group);

struct LipschitzEstimate {
  double slope = 0.0;      // least-squares slope through the origin
  double max_ratio = 0.0;  // largest observed ||dphi|| / ||dz||
  int samples = 0;
};

/// Probe ||phi_hat(z) - phi(z*)|| against ||z - z*|| at feasible points
/// within `radius` of the saddle point.
LipschitzEstimate estimate_lipschitz(const SaddleProblem& p, const EquilibriumSolve& eq,
                                     const ParameterVector& h, double radius, int samples,
                                     RngStream& rng);

enum class StabilityCase { Strong, Degraded };

const char* to_string(StabilityCase c);

struct StabilityConstants {
  StabilityCase stability_case = StabilityCase::Strong;
  double kappa = 1.0;
  double M_x = 0.0, M_lambda = 0.0, M = 0.0;
  double lambda_max_A = 0.0;
  double phi_sup = 0.0, phi_x_sup = 0.0;
  double phi_A_sup = 0.0, phi_x_A_sup = 0.0;
  double a1 = 0.0, a2 = 0.0, a3 = 0.0, a4 = 0.0;
  double c1 = 0.0, c2 = 0.0, c3 = 0.0, c4 = 0.0;
  double gamma0 = 0.0;  // sup ||phi|| (strong) or sup ||phi_x|| (degraded)
  double gamma = 0.0;   // sqrt(gamma0^2 + 1)
  double alpha_sq = 0.0, beta = 0.0;
  double lipschitz_L = 0.0;
  int samples = 0;
  int failed_samples = 0;
  bool condition_violated = false;  // a3 <= 0

  /// a4^2 gamma^2 alpha^2 / a3^2, or empty when a3 <= 0.
  std::optional<double> tracking_bound(double alpha_sq_value) const;
};

/// Closed-form constants from moduli and sensitivity sups.
StabilityConstants lyapunov_constants(StabilityCase c, double kappa, double M_x, double M_lambda,
                                      double lambda_max_A, double phi_sup, double phi_x_sup,
                                      double phi_A_sup, double phi_x_A_sup);

struct SensitivitySample {
  bool ok = false;
  double phi_norm = 0.0, phi_x_norm = 0.0;
  double phi_A_norm = 0.0, phi_x_A_norm = 0.0;
  double M_x = 0.0, M_lambda = 0.0;
  EquilibriumSolve solve;
};

/// Saddle point, IFT Jacobian and local moduli at one parameter value.
SensitivitySample sample_sensitivity(const SaddleProblem& p, const ChannelModel& model,
                                     const ParameterVector& h, const JointState* warm = nullptr);

struct ConstantsOptions {
  bool lipschitz = true;
  double lipschitz_radius = 0.05;
  int lipschitz_samples = 40;
  std::uint64_t seed = 7;
};

/// Sampled constants over `sampled_h`. Sensitivity sups and moduli infima are
/// taken over the saddle points at those parameters.
StabilityConstants stability_constants(const SaddleProblem& p, const ChannelModel& model, double kappa,
                                       const std::vector<ParameterVector>& sampled_h,
                                       const ConstantsOptions& opts = {});

/// Fold precomputed samples into constants (no solves).
StabilityConstants fold_constants(const SaddleProblem& p, const ChannelModel& model, double kappa,
                                  const std::vector<SensitivitySample>& samples);

struct Verdict {
  StabilityCase stability_case = StabilityCase::Strong;
  bool pass = false;
  double margin = 0.0;  // kappa min(2M, -lambda_max A) - ||phi A||
};

Verdict condition_check(const StabilityConstants& c, double kappa);

/// Independent stationary draws of h.
std::vector<ParameterVector> draw_parameters(const ChannelModel& model, int count, std::uint64_t seed);

}  // namespace sptrack
