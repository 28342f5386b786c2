#include "sptrack/channel.hpp"

#include <cmath>

#include "sptrack/errors.hpp"

namespace sptrack {

ChannelModel::ChannelModel(Eigen::MatrixXd A, Eigen::VectorXd h_bar, Excitation excitation,
                           bool complex_embedding)
    : A_(std::move(A)), h_bar_(std::move(h_bar)), excitation_(excitation), complex_(complex_embedding) {
  const auto q = h_bar_.size();
  if (A_.rows() != q || A_.cols() != q) throw ConfigError("channel: A must be q x q");
  if (!h_bar_.allFinite() || !A_.allFinite()) throw ConfigError("channel: non-finite A or h_bar");
  if ((A_ - A_.transpose()).norm() > 1e-12 * (1.0 + A_.norm())) throw ConfigError("channel: A must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A_, Eigen::EigenvaluesOnly);
  lambda_max_ = eig.eigenvalues().maxCoeff();
  if (!(lambda_max_ < 0.0)) throw ConfigError("channel: A must be negative definite");
  if (excitation_.kind == Excitation::Kind::White && !(excitation_.sigma_u >= 0.0))
    throw ConfigError("channel: sigma_u must be nonnegative");
  if (complex_ && q % 2 != 0) throw ConfigError("channel: complex embedding needs an even dimension");
  double s = excitation_.kind == Excitation::Kind::White ? excitation_.sigma_u : 0.0;
  if (complex_) s /= std::sqrt(2.0);
  scale_ = Eigen::VectorXd::Constant(q, s);
}

ChannelModel ChannelModel::isotropic(double a, Eigen::VectorXd h_bar, Excitation excitation,
                                     bool complex_embedding) {
  if (!(a > 0.0)) throw ConfigError("channel: fading rate a must be positive");
  const auto q = h_bar.size();
  return ChannelModel(-a * Eigen::MatrixXd::Identity(q, q), std::move(h_bar), excitation, complex_embedding);
}

ChannelModel ChannelModel::normalized_fading(double a, Eigen::VectorXd h_bar, bool complex_embedding) {
  if (!(a > 0.0)) throw ConfigError("channel: fading rate a must be positive");
  return isotropic(a, std::move(h_bar), Excitation::white(std::sqrt(2.0 * a)), complex_embedding);
}

Eigen::MatrixXd ChannelModel::stationary_covariance() const {
  const int n = q();
  const Eigen::MatrixXd D = scale_.array().square().matrix().asDiagonal();
  // vec(A S + S A^T) = (I (x) A + A (x) I) vec(S).
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n * n, n * n);
  for (int c = 0; c < n; ++c) {
    L.block(c * n, c * n, n, n) += A_;
    for (int r = 0; r < n; ++r) L.block(r * n, c * n, n, n).diagonal().array() += A_(r, c);
  }
  const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(D.data(), n * n);
  const Eigen::VectorXd s = L.partialPivLu().solve(rhs);
  Eigen::MatrixXd S = Eigen::Map<const Eigen::MatrixXd>(s.data(), n, n);
  return 0.5 * (S + S.transpose());
}

double ChannelModel::alpha_sq() const { return scale_.squaredNorm(); }

double ChannelModel::beta() const {
  if (scale_.size() == 0 || scale_.maxCoeff() == 0.0) return 0.0;
  if (scale_.maxCoeff() - scale_.minCoeff() < 1e-15 * scale_.maxCoeff()) {
    const double k = static_cast<double>(scale_.size());
    return scale_(0) * std::sqrt(2.0) * std::exp(std::lgamma((k + 1.0) / 2.0) - std::lgamma(k / 2.0));
  }
  RngStream rng(0x5eed, 0);
  ExcitationAccumulator acc;
  for (int i = 0; i < 200000; ++i) acc.add(scale_.cwiseProduct(rng.normal_vector(q())));
  return acc.magnitude();
}

RngStream::RngStream(std::uint64_t master, std::uint64_t stream) : master_(master), stream_(stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x9e3779b9u};
  engine_.seed(seq);
}

double RngStream::normal() {
  ++counter_;
  return normal_(engine_);
}

Eigen::VectorXd RngStream::normal_vector(int q) {
  Eigen::VectorXd v(q);
  for (int i = 0; i < q; ++i) v(i) = normal();
  return v;
}

RngStream RngStream::split(std::uint64_t child) const {
  std::uint64_t x = stream_ * 0x9e3779b97f4a7c15ULL + child + 1;
  x ^= x >> 31;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  return RngStream(master_, x);
}

ChannelState ChannelState::at(const Eigen::VectorXd& h) {
  ChannelState s;
  s.h = h;
  s.h_dot_estimate = Eigen::VectorXd::Zero(h.size());
  s.last_noise = Eigen::VectorXd::Zero(h.size());
  s.h_dot_true = Eigen::VectorXd::Zero(h.size());
  return s;
}

ChannelState step_channel(const ChannelModel& model, const ChannelState& state, double dt,
                          RngStream& rng, int substeps) {
  if (!(dt > 0.0)) throw ConfigError("step_channel: dt must be positive");
  if (substeps < 1) throw ConfigError("step_channel: substeps must be >= 1");
  const int q = model.q();
  if (state.h.size() != q) throw ConfigError("step_channel: state dimension mismatch");
  Eigen::VectorXd xi = Eigen::VectorXd::Zero(q);
  if (model.excitation().kind == Excitation::Kind::White) {
    for (int s = 0; s < substeps; ++s) xi += rng.normal_vector(q);
    xi /= std::sqrt(static_cast<double>(substeps));
  }
  ChannelState next;
  next.last_noise = model.noise_scale().cwiseProduct(xi);
  next.h = state.h + dt * model.drift(state.h) + std::sqrt(dt) * next.last_noise;
  next.h_dot_estimate = (next.h - state.h) / dt;
  next.h_dot_true = model.drift(next.h) + next.last_noise / std::sqrt(dt);
  return next;
}

Eigen::VectorXd sample_stationary(const ChannelModel& model, RngStream& rng) {
  const Eigen::MatrixXd S = model.stationary_covariance();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
  const Eigen::VectorXd d = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt();
  const Eigen::VectorXd xi = rng.normal_vector(model.q());
  Eigen::VectorXd y = d.cwiseProduct(xi);
  // S = P^T L D L^T P, so x = P^T L D^{1/2} xi has covariance S.
  Eigen::VectorXd x = ldlt.matrixL() * y;
  x = ldlt.transpositionsP().transpose() * x;
  return model.h_bar() + x;
}

void ExcitationAccumulator::add(const Eigen::VectorXd& u) {
  ++count_;
  const double s = u.squaredNorm();
  sum_sq_ += s;
  sum_norm_ += std::sqrt(s);
}

double ExcitationAccumulator::power() const {
  if (count_ == 0) throw ConfigError("excitation average over an empty horizon");
  return sum_sq_ / static_cast<double>(count_);
}

double ExcitationAccumulator::magnitude() const {
  if (count_ == 0) throw ConfigError("excitation average over an empty horizon");
  return sum_norm_ / static_cast<double>(count_);
}

double excitation_power(const std::vector<Eigen::VectorXd>& samples) {
  ExcitationAccumulator acc;
  for (const auto& u : samples) acc.add(u);
  return acc.power();
}

double excitation_magnitude(const std::vector<Eigen::VectorXd>& samples) {
  ExcitationAccumulator acc;
  for (const auto& u : samples) acc.add(u);
  return acc.magnitude();
}

}  // namespace sptrack
