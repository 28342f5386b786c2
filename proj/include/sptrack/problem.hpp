#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sptrack {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
/// Real embedding of the time-varying parameter h (complex entries stored as
/// real parts followed by imaginary parts).
using ParameterVector = Eigen::VectorXd;

/// Primal-dual pair (x, lambda).
struct JointState {
  Vec primal;
  Vec dual;

  JointState() = default;
  JointState(Vec x, Vec lambda) : primal(std::move(x)), dual(std::move(lambda)) {}

  Eigen::Index size() const { return primal.size() + dual.size(); }
  Vec stacked() const;
  static JointState from_stacked(const Vec& z, Eigen::Index n);
};

enum class SetKind { Unbounded, Box, Orthant, PsdTraceBalls };

/// One Hermitian order-`order` block in the isometric real embedding (see
/// projection.hpp), occupying order*order consecutive coordinates.
struct PsdBlock {
  int offset = 0;
  int order = 0;
  double budget = 0.0;
};

/// Closed convex set with a cheap Euclidean projection.
class FeasibleSet {
 public:
  static FeasibleSet unbounded(int dim);
  static FeasibleSet orthant(int dim);
  static FeasibleSet box(Vec lower, Vec upper);
  static FeasibleSet psd_balls(int dim, std::vector<PsdBlock> blocks);

  SetKind kind() const { return kind_; }
  int dim() const { return dim_; }
  const Vec& lower() const { return lower_; }
  const Vec& upper() const { return upper_; }
  const std::vector<PsdBlock>& blocks() const { return blocks_; }

  Vec project(const Vec& v) const;
  bool contains(const Vec& v, double tol = 1e-9) const;

 private:
  SetKind kind_ = SetKind::Unbounded;
  int dim_ = 0;
  Vec lower_, upper_;
  std::vector<PsdBlock> blocks_;
};

struct Dimensions {
  int n = 0;  // primal
  int m = 0;  // dual (minimizing player)
  int q = 0;  // parameter
};

/// Curvature hints. M_lambda == 0 marks a degraded (only convex in lambda)
/// problem.
struct ModuliHint {
  double M_x = 0.0;
  double M_lambda = 0.0;
};

/// L(x, lambda; h), concave in x and convex in lambda. Implementations are
/// immutable and safe to share between threads.
class SaddleProblem {
 public:
  virtual ~SaddleProblem() = default;

  virtual std::string name() const = 0;
  virtual Dimensions dims() const = 0;
  virtual double value(const JointState& s, const ParameterVector& h) const = 0;
  virtual void gradients(const JointState& s, const ParameterVector& h, Vec& gx,
                         Vec& gl) const = 0;

  /// Jacobian of the stacked gradient (dL/dx, dL/dlambda) with respect to
  /// (x, lambda). Central differences unless overridden.
  virtual Mat hessian(const JointState& s, const ParameterVector& h) const;
  /// Jacobian of the stacked gradient with respect to h, (n+m) x q.
  virtual Mat mixed(const JointState& s, const ParameterVector& h) const;

  virtual const FeasibleSet& primal_set() const = 0;
  /// Orthant for Lagrangian multipliers; other kinds for min-max games.
  virtual const FeasibleSet& dual_set() const = 0;
  virtual ModuliHint moduli_hint() const = 0;

  /// Starting point for solvers. Projected zero unless overridden.
  virtual JointState initial_state(const ParameterVector& h) const;

  bool strong() const { return moduli_hint().M_lambda > 0.0; }
};

void check_dimensions(const SaddleProblem& p, const JointState& s, const ParameterVector& h);

double eval_lagrangian(const SaddleProblem& p, const JointState& s, const ParameterVector& h);

/// Stacked gradient (dL/dx, dL/dlambda). Throws NumericError on non-finite
/// entries.
Vec stacked_gradient(const SaddleProblem& p, const JointState& s, const ParameterVector& h);

/// Entry i is u_i if u_i > 0 or lambda_i > 0, else 0.
Vec positive_projection(const Vec& direction, const Vec& dual);

/// (kappa dL/dx, kappa [-dL/dlambda]^+_lambda). For non-orthant dual sets the
/// dual block is the raw descent direction; feasibility is restored by the
/// projected Euler step.
Vec saddle_field(const SaddleProblem& p, const JointState& s, const ParameterVector& h,
                 double kappa);

/// Stationarity map F. Orthant multipliers use the complementarity form
/// (lambda_i g_i at an active bound), other constrained blocks the natural
/// map Pi(v +/- g) - v.
Vec equilibrium_residual(const SaddleProblem& p, const JointState& s, const ParameterVector& h);

/// Natural-map residual Pi(x + gx) - x, Pi(lambda - gl) - lambda. Continuous
/// everywhere; used as the Newton merit.
Vec natural_residual(const SaddleProblem& p, const JointState& s, const ParameterVector& h);

enum class ResidualForm { Complementarity, Natural };

/// B = dF/dx~ and K = dF/dh with the active pattern frozen at `s`.
struct ResidualJacobian {
  Mat B;
  Mat K;
};

ResidualJacobian residual_jacobian(const SaddleProblem& p, const JointState& s,
                                   const ParameterVector& h,
                                   ResidualForm form = ResidualForm::Complementarity);

/// Central-difference step used for Hessian and Jacobian probes.
double fd_step(const Vec& at);

Mat fd_hessian(const SaddleProblem& p, const JointState& s, const ParameterVector& h);
Mat fd_mixed(const SaddleProblem& p, const JointState& s, const ParameterVector& h);

struct Moduli {
  double M_x = 0.0;
  double M_lambda = 0.0;
  int samples = 0;
  bool primal_indefinite = false;
};

/// Infimum over samples of -lambda_max(Hxx) and lambda_min(Hll), clamped at 0.
Moduli estimate_moduli(const SaddleProblem& p, const ParameterVector& h,
                       const std::vector<JointState>& samples);

}  // namespace sptrack
