#include <gtest/gtest.h>

#include <cmath>

#include "sptrack/channel.hpp"
#include "sptrack/errors.hpp"

using namespace sptrack;
using Eigen::VectorXd;

TEST(Channel, EquilibriumIsFixedWithoutExcitation) {
  const VectorXd hb = (VectorXd(3) << 1.0, -2.0, 0.5).finished();
  const ChannelModel m = ChannelModel::isotropic(0.3, hb, Excitation::zero());
  RngStream rng(1, 0);
  ChannelState s = ChannelState::at(hb);
  for (int k = 0; k < 100; ++k) s = step_channel(m, s, 0.01, rng);
  EXPECT_EQ(s.h, hb);
  EXPECT_EQ(rng.counter(), 0u);
}

TEST(Channel, DeterministicDecayMatchesClosedForm) {
  const double a = 0.5, dt = 1e-3;
  const VectorXd hb = VectorXd::Ones(2);
  const ChannelModel m = ChannelModel::isotropic(a, hb, Excitation::zero());
  RngStream rng(1, 0);
  ChannelState s = ChannelState::at((VectorXd(2) << 3.0, -1.0).finished());
  VectorXd e0 = s.h - hb;
  for (int k = 1; k <= 2000; ++k) {
    const VectorXd before = s.h - hb;
    s = step_channel(m, s, dt, rng);
    EXPECT_LT(((s.h - hb) - (1 - a * dt) * before).norm(), 1e-14);
  }
  const VectorXd exact = std::exp(-a * 2000 * dt) * e0;
  EXPECT_LT(((s.h - hb) - exact).norm() / exact.norm(), 10 * a * dt);
}

TEST(Channel, StationaryVarianceIsUnit) {
  const double a = 1.0, dt = 0.01;
  const int q = 8;
  const ChannelModel m = ChannelModel::normalized_fading(a, VectorXd::Zero(q));
  EXPECT_LT((m.stationary_covariance() - Eigen::MatrixXd::Identity(q, q)).norm(), 1e-12);
  RngStream rng(42, 3);
  ChannelState s = ChannelState::at(sample_stationary(m, rng));
  const long steps = static_cast<long>(400.0 / (a * dt));
  double sum_sq = 0.0;
  for (long k = 0; k < steps; ++k) {
    s = step_channel(m, s, dt, rng);
    sum_sq += s.h.squaredNorm();
  }
  const double var = sum_sq / (static_cast<double>(steps) * q);
  // Euler-Maruyama stationary variance is 1 / (1 - a dt / 2).
  EXPECT_NEAR(var, 1.0, 0.05);
}

TEST(Channel, StationaryCovarianceSolvesLyapunov) {
  Eigen::MatrixXd A(2, 2);
  A << -1.0, 0.3, 0.3, -0.5;
  const ChannelModel m(A, VectorXd::Zero(2), Excitation::white(0.7));
  const Eigen::MatrixXd S = m.stationary_covariance();
  const Eigen::MatrixXd R = A * S + S * A.transpose() + 0.49 * Eigen::MatrixXd::Identity(2, 2);
  EXPECT_LT(R.norm(), 1e-12);
}

TEST(Channel, AlphaSquaredCountsRealDimensions) {
  const double a = 0.02;
  const ChannelModel jam = ChannelModel::normalized_fading(a, VectorXd::Ones(16), true);
  EXPECT_NEAR(jam.alpha_sq(), 16 * a, 1e-15);
  const ChannelModel num = ChannelModel::normalized_fading(a, VectorXd::Ones(2), false);
  EXPECT_NEAR(num.alpha_sq(), 4 * a, 1e-15);
  EXPECT_EQ(ChannelModel::isotropic(a, VectorXd::Ones(2), Excitation::zero()).alpha_sq(), 0.0);

  // Sample estimate from the applied excitation.
  RngStream rng(7, 1);
  ChannelState s = ChannelState::at(jam.h_bar());
  ExcitationAccumulator acc;
  for (int k = 0; k < 20000; ++k) {
    s = step_channel(jam, s, 0.1, rng);
    acc.add(s.last_noise);
  }
  EXPECT_NEAR(acc.power() / (16 * a), 1.0, 0.02);
}

TEST(Channel, BetaFoldedNormal) {
  const ChannelModel m = ChannelModel::isotropic(1.0, VectorXd::Zero(1), Excitation::white(1.0));
  EXPECT_NEAR(m.beta(), std::sqrt(2.0 / M_PI), 1e-12);
  RngStream rng(11, 0);
  ExcitationAccumulator acc;
  for (int k = 0; k < 1000000; ++k) acc.add(rng.normal_vector(1));
  EXPECT_NEAR(acc.magnitude() / m.beta(), 1.0, 0.02);
  EXPECT_EQ(ChannelModel::isotropic(1.0, VectorXd::Zero(1), Excitation::zero()).beta(), 0.0);
}

TEST(Channel, BetaChiMeanAgainstMonteCarlo) {
  const double a = 0.05;
  const ChannelModel m = ChannelModel::normalized_fading(a, VectorXd::Zero(16), true);
  RngStream rng(12, 0);
  std::vector<VectorXd> us;
  for (int k = 0; k < 100000; ++k) us.push_back(m.noise_scale().cwiseProduct(rng.normal_vector(16)));
  EXPECT_NEAR(excitation_magnitude(us) / m.beta(), 1.0, 0.01);
  EXPECT_NEAR(excitation_power(us) / m.alpha_sq(), 1.0, 0.02);
}

TEST(Channel, ZeroExcitationAverages) {
  std::vector<VectorXd> us(10, VectorXd::Zero(4));
  EXPECT_EQ(excitation_power(us), 0.0);
  EXPECT_EQ(excitation_magnitude(us), 0.0);
  EXPECT_THROW(excitation_power({}), ConfigError);
}

TEST(Channel, SubstepsShareBrownianIncrement) {
  const double a = 0.1, dt = 0.02;
  const ChannelModel m = ChannelModel::normalized_fading(a, VectorXd::Zero(3));
  RngStream coarse_rng(5, 9), fine_rng(5, 9);
  ChannelState c = ChannelState::at(VectorXd::Zero(3)), f = c;
  double noise_c = 0.0, noise_f = 0.0;
  for (int k = 0; k < 50; ++k) {
    c = step_channel(m, c, dt, coarse_rng, 2);
    noise_c += std::sqrt(dt) * c.last_noise.sum();
    for (int j = 0; j < 2; ++j) {
      f = step_channel(m, f, dt / 2, fine_rng, 1);
      noise_f += std::sqrt(dt / 2) * f.last_noise.sum();
    }
  }
  EXPECT_NEAR(noise_c, noise_f, 1e-12);
  // Paths differ only by the drift discretization.
  EXPECT_LT((c.h - f.h).norm(), 0.05 * a * dt * 50);
}

TEST(Channel, HDotSeries) {
  const ChannelModel m = ChannelModel::normalized_fading(0.2, VectorXd::Ones(2));
  RngStream rng(3, 3);
  const ChannelState s0 = ChannelState::at((VectorXd(2) << 0.5, 2.0).finished());
  const ChannelState s1 = step_channel(m, s0, 0.01, rng);
  EXPECT_LT((s1.h_dot_estimate - (s1.h - s0.h) / 0.01).norm(), 1e-12);
  EXPECT_LT((s1.h_dot_true - (m.drift(s1.h) + s1.last_noise / 0.1)).norm(), 1e-12);
}

TEST(Rng, StreamsAreReproducibleAndDistinct) {
  RngStream a(99, 1), b(99, 1), c(99, 2), d(100, 1);
  const VectorXd va = a.normal_vector(10);
  EXPECT_EQ(va, b.normal_vector(10));
  EXPECT_NE(va, c.normal_vector(10));
  EXPECT_NE(va, d.normal_vector(10));
  EXPECT_EQ(a.counter(), 10u);
  RngStream s1 = RngStream(99, 1).split(4), s2 = RngStream(99, 1).split(4);
  EXPECT_EQ(s1.normal(), s2.normal());
}

TEST(Channel, InvalidModelsThrow) {
  EXPECT_THROW(ChannelModel::isotropic(0.0, VectorXd::Zero(2), Excitation::zero()), ConfigError);
  EXPECT_THROW(ChannelModel(Eigen::MatrixXd::Identity(2, 2), VectorXd::Zero(2), Excitation::zero()),
               ConfigError);
  EXPECT_THROW(ChannelModel::normalized_fading(0.1, VectorXd::Zero(3), true), ConfigError);
  const ChannelModel m = ChannelModel::normalized_fading(0.1, VectorXd::Zero(2));
  RngStream rng(1, 1);
  EXPECT_THROW(step_channel(m, ChannelState::at(VectorXd::Zero(2)), 0.0, rng), ConfigError);
  EXPECT_THROW(step_channel(m, ChannelState::at(VectorXd::Zero(2)), 0.1, rng, 0), ConfigError);
}
