#pragma once

#include <complex>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "sptrack/flow.hpp"
#include "sptrack/problem.hpp"

namespace sptrack {

/// L = -(x - h)^2 / 2 + lambda^2 / 2 with lambda >= 0. Saddle at x = h,
/// lambda = 0; sensitivity (1, 0).
class QuadToy final : public SaddleProblem {
 public:
  QuadToy();
  std::string name() const override { return "quad-toy"; }
  Dimensions dims() const override { return {1, 1, 1}; }
  double value(const JointState& s, const ParameterVector& h) const override;
  void gradients(const JointState& s, const ParameterVector& h, Vec& gx, Vec& gl) const override;
  Mat hessian(const JointState& s, const ParameterVector& h) const override;
  Mat mixed(const JointState& s, const ParameterVector& h) const override;
  const FeasibleSet& primal_set() const override { return primal_; }
  const FeasibleSet& dual_set() const override { return dual_; }
  ModuliHint moduli_hint() const override { return {1.0, 1.0}; }

 private:
  FeasibleSet primal_, dual_;
};

// ---------------------------------------------------------------------------
// Transmission versus jamming game.

struct JammingInstance {
  int antennas = 2;
  double p_t = 10.0;
  double p_j = 10.0;
  double noise = 1.0;  // sigma_n^2

  void validate() const;
};

using CMat = Eigen::MatrixXcd;

/// Parameter layout: h has 4 N^2 reals. The first 2 N^2 are the real parts of
/// vec([H1 H2]) (column-major over the N x 2N block matrix), the rest the
/// imaginary parts.
void jamming_channels(const JammingInstance& inst, const ParameterVector& h, CMat& H1, CMat& H2);
ParameterVector jamming_parameter(const CMat& H1, const CMat& H2);

/// log det(I + (s2 I + H2 Z H2^H)^{-1} H1 Q H1^H), nats.
double jamming_capacity(const JammingInstance& inst, const CMat& Q, const CMat& Z, const CMat& H1,
                        const CMat& H2);
/// (dC/dQ, dC/dZ) as Hermitian matrices.
std::pair<CMat, CMat> jamming_gradients(const JammingInstance& inst, const CMat& Q, const CMat& Z,
                                        const CMat& H1, const CMat& H2);

/// Transmitter covariance Q (maximizer, primal) against jammer covariance Z
/// (minimizer, dual block), both in the Hermitian real embedding and
/// constrained to PSD trace balls.
class JammingGame final : public SaddleProblem {
 public:
  explicit JammingGame(JammingInstance inst = {});
  std::string name() const override { return "jamming-2x2"; }
  Dimensions dims() const override;
  double value(const JointState& s, const ParameterVector& h) const override;
  void gradients(const JointState& s, const ParameterVector& h, Vec& gx, Vec& gl) const override;
  const FeasibleSet& primal_set() const override { return primal_; }
  const FeasibleSet& dual_set() const override { return dual_; }
  /// Nominal positive hint marking the strong case; sampled moduli are what
  /// the constants use.
  ModuliHint moduli_hint() const override { return {1e-3, 1e-3}; }
  JointState initial_state(const ParameterVector& h) const override;

  const JammingInstance& instance() const { return inst_; }

 private:
  JammingInstance inst_;
  FeasibleSet primal_, dual_;
};

// ---------------------------------------------------------------------------
// Network utility maximization.

struct NumLink {
  int tx = 0;
  int rx = 0;
  double power = 0.0;
  int h_index = 0;
};

struct NumFlow {
  int src = 0;
  int dst = 0;
  std::vector<int> route;  // 0-based link indices in path order
};

/// A capacity constraint: the summed rate on `links` may not exceed
/// log(1 + sum_l h_l^2 P_l). One per link, plus one multiple-access sum per
/// receiving node with two or more incoming links (unless disabled).
struct CapacityConstraint {
  int node = 0;
  std::vector<int> links;
};

struct NumInstance {
  int nodes = 0;
  std::vector<NumLink> links;
  std::vector<NumFlow> flows;
  double r_min = -0.5;
  double r_max = 1000.0;
  /// Relative slack in the throughput admission test.
  double admit_tol = 0.0;
  /// Per-node switch for the multiple-access sum constraint (default on).
  std::map<int, bool> mac_sum;
  /// Optional explicit compensation groups over stacked variable indices.
  std::vector<std::vector<int>> groups;

  void validate() const;
  int q() const;
  std::vector<CapacityConstraint> constraints() const;
};

/// Per-link power giving mean receive SNR `snr_db` when E[h^2] = mean_sq_gain.
double snr_power(double snr_db, double mean_sq_gain);

/// Three nodes, links 1->2 and 2->3, flows (1,2), (1,3), (2,3).
NumInstance num_3node(double snr_db = 10.0, double mean_sq_gain = 2.0);

/// Lagrangian sum log(1 + r_f) - sum_c lambda_c (load_c - cap_c(h)) +
/// sum_f mu_f r_f. Primal r in the box [r_min, r_max]; dual = (lambda, mu).
class NumProblem final : public SaddleProblem {
 public:
  explicit NumProblem(NumInstance inst, std::string name = "num");
  std::string name() const override { return name_; }
  Dimensions dims() const override;
  double value(const JointState& s, const ParameterVector& h) const override;
  void gradients(const JointState& s, const ParameterVector& h, Vec& gx, Vec& gl) const override;
  Mat hessian(const JointState& s, const ParameterVector& h) const override;
  Mat mixed(const JointState& s, const ParameterVector& h) const override;
  const FeasibleSet& primal_set() const override { return primal_; }
  const FeasibleSet& dual_set() const override { return dual_; }
  ModuliHint moduli_hint() const override;

  const NumInstance& instance() const { return inst_; }
  const std::vector<CapacityConstraint>& constraints() const { return cons_; }
  /// Constraint-by-flow incidence.
  const Mat& incidence() const { return R_; }
  Vec capacities(const ParameterVector& h) const;
  /// Groups by owning node: flows and their nonnegativity multipliers by
  /// source, per-link multipliers by transmitter, sum constraints by receiver.
  Partition node_partition() const;

 private:
  NumInstance inst_;
  std::string name_;
  std::vector<CapacityConstraint> cons_;
  Mat R_;
  FeasibleSet primal_, dual_;
};

/// Capacity of one constraint.
double constraint_capacity(const NumInstance& inst, const CapacityConstraint& c, const ParameterVector& h);

/// Sum of rates over flows admitted at every receiving node on their route.
double throughput(const NumInstance& inst, const Vec& r, const ParameterVector& h);

// ---------------------------------------------------------------------------

std::shared_ptr<const QuadToy> make_quad_toy();
std::shared_ptr<const JammingGame> make_jamming(const JammingInstance& inst = {});
std::shared_ptr<const NumProblem> make_num(const NumInstance& inst, const std::string& name);

}  // namespace sptrack
