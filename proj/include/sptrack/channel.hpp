#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace sptrack {

struct Excitation {
  enum class Kind { Zero, White };
  Kind kind = Kind::Zero;
  double sigma_u = 0.0;

  static Excitation zero() { return {}; }
  static Excitation white(double sigma) { return {Kind::White, sigma}; }
};

/// dh = A (h - h_bar) dt + sigma_u dW. With a complex embedding (first half
/// real parts, second half imaginary parts) each real component carries
/// sigma_u / sqrt(2), so a complex entry has total intensity sigma_u^2.
class ChannelModel {
 public:
  ChannelModel(Eigen::MatrixXd A, Eigen::VectorXd h_bar, Excitation excitation,
               bool complex_embedding = false);

  /// A = -a I.
  static ChannelModel isotropic(double a, Eigen::VectorXd h_bar, Excitation excitation,
                                bool complex_embedding = false);
  /// A = -a I with sigma_u = sqrt(2a): unit stationary variance per (complex or
  /// real) entry.
  static ChannelModel normalized_fading(double a, Eigen::VectorXd h_bar, bool complex_embedding = false);

  int q() const { return static_cast<int>(h_bar_.size()); }
  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::VectorXd& h_bar() const { return h_bar_; }
  const Excitation& excitation() const { return excitation_; }
  bool complex_embedding() const { return complex_; }
  /// Per-component standard deviation of the white excitation.
  const Eigen::VectorXd& noise_scale() const { return scale_; }
  double lambda_max_A() const { return lambda_max_; }

  Eigen::VectorXd drift(const Eigen::VectorXd& h) const { return A_ * (h - h_bar_); }
  /// Solution of A S + S A^T + diag(scale^2) = 0.
  Eigen::MatrixXd stationary_covariance() const;
  /// E||u||^2 of the continuous-time excitation.
  double alpha_sq() const;
  /// E||u||.
  double beta() const;

 private:
  Eigen::MatrixXd A_;
  Eigen::VectorXd h_bar_;
  Excitation excitation_;
  bool complex_;
  Eigen::VectorXd scale_;
  double lambda_max_;
};

/// Seeded normal stream identified by (master seed, stream index). Streams
/// with different indices are seeded independently through seed_seq.
class RngStream {
 public:
  RngStream(std::uint64_t master, std::uint64_t stream);

  double normal();
  Eigen::VectorXd normal_vector(int q);
  RngStream split(std::uint64_t child) const;

  std::uint64_t master() const { return master_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t master_, stream_, counter_ = 0;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

struct ChannelState {
  Eigen::VectorXd h;
  /// (h_now - h_prev) / dt.
  Eigen::VectorXd h_dot_estimate;
  /// The excitation sample sigma * xi applied in the last step.
  Eigen::VectorXd last_noise;
  /// A (h_now - h_bar) + sigma * xi / sqrt(dt): drift plus noise rate.
  Eigen::VectorXd h_dot_true;

  static ChannelState at(const Eigen::VectorXd& h);
};

/// One Euler-Maruyama step. `substeps` (>= 1) normals are summed and rescaled
/// into xi, so a step of dt with 2k substeps sees the same Brownian increment
/// as two steps of dt/2 with k substeps each.
ChannelState step_channel(const ChannelModel& model, const ChannelState& state, double dt,
                          RngStream& rng, int substeps = 1);

Eigen::VectorXd sample_stationary(const ChannelModel& model, RngStream& rng);

/// Running averages of ||u||^2 and ||u||.
class ExcitationAccumulator {
 public:
  void add(const Eigen::VectorXd& u);
  long count() const { return count_; }
  double power() const;
  double magnitude() const;

 private:
  long count_ = 0;
  double sum_sq_ = 0.0, sum_norm_ = 0.0;
};

double excitation_power(const std::vector<Eigen::VectorXd>& samples);
double excitation_magnitude(const std::vector<Eigen::VectorXd>& samples);

}  // namespace sptrack
