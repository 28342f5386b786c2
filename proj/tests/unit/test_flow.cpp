#include <gtest/gtest.h>

#include <cmath>

#include "sptrack/applications.hpp"
#include "sptrack/equilibrium.hpp"
#include "sptrack/errors.hpp"
#include "sptrack/flow.hpp"

using namespace sptrack;

namespace {

JointState st(double x, double l) { return JointState(Vec::Constant(1, x), Vec::Constant(1, l)); }
ParameterVector hv(double h) { return ParameterVector::Constant(1, h); }

IntegratorConfig cfg_of(double kappa, double dt) {
  IntegratorConfig c;
  c.kappa = kappa;
  c.dt = dt;
  return c;
}

ChannelState channel_with_rate(double h, double hdot) {
  ChannelState ch = ChannelState::at(hv(h));
  ch.h_dot_estimate = hv(hdot);
  ch.h_dot_true = hv(hdot);
  return ch;
}

}  // namespace

TEST(PdStep, HandEvaluatedEulerStep) {
  QuadToy p;
  const JointState s = pd_step(p, st(0, 0), hv(1), cfg_of(1.0, 0.1));
  EXPECT_DOUBLE_EQ(s.primal(0), 0.1);
  EXPECT_DOUBLE_EQ(s.dual(0), 0.0);
  const JointState t = pd_step(p, st(0, 1), hv(1), cfg_of(1.0, 0.1));
  EXPECT_DOUBLE_EQ(t.primal(0), 0.1);
  EXPECT_DOUBLE_EQ(t.dual(0), 0.9);
}

TEST(PdStep, SaddleIsFixed) {
  QuadToy p;
  const JointState s = pd_step(p, st(1.7, 0), hv(1.7), cfg_of(2.0, 0.05));
  EXPECT_EQ(s.primal(0), 1.7);
  EXPECT_EQ(s.dual(0), 0.0);
  auto num = make_num(num_3node(), "num-3node");
  const ParameterVector h = ParameterVector::Ones(2);
  const EquilibriumSolve eq = solve_saddle_frozen(*num, h, 1e-12, 200000);
  ASSERT_TRUE(eq.converged);
  const JointState n = pd_step(*num, eq.x_star, h, cfg_of(0.5, 0.02));
  EXPECT_LT((n.stacked() - eq.x_star.stacked()).norm(), 1e-12);
}

TEST(PdStep, DualStaysNonnegative) {
  QuadToy p;
  JointState s = st(0, 0.05);
  for (int k = 0; k < 10; ++k) {
    s = pd_step(p, s, hv(1), cfg_of(1.0, 0.5));
    EXPECT_GE(s.dual(0), 0.0);
  }
  // An overshooting step is clipped at the boundary.
  s = pd_step(p, st(0, 0.05), hv(1), cfg_of(1.0, 1.5));
  EXPECT_EQ(s.dual(0), 0.0);
}

TEST(PdStep, FrozenDecayRateMatchesModulus) {
  QuadToy p;
  const double dt = 1e-3;
  JointState s = st(0, 0);
  const double h = 3.0;
  double e1 = 0.0;
  for (int k = 1; k <= 3000; ++k) {
    s = pd_step(p, s, hv(h), cfg_of(1.0, dt));
    if (k == 1000) e1 = std::abs(s.primal(0) - h);
  }
  const double e3 = std::abs(s.primal(0) - h);
  const double rate = std::log(e1 / e3) / 2.0;
  EXPECT_NEAR(rate, 1.0, 0.1);
}

TEST(CompensatedStep, ZeroRateEqualsPlain) {
  auto num = make_num(num_3node(), "num-3node");
  const ParameterVector h = (ParameterVector(2) << 0.7, 1.2).finished();
  JointState s((Vec(3) << 0.3, 0.5, 0.1).finished(), (Vec(5) << 0.2, 0.0, 0.4, 0.0, 0.1).finished());
  ChannelState ch = ChannelState::at(h);
  const IntegratorConfig c = cfg_of(0.5, 0.02);
  const Mat phi = Mat::Random(8, 2);
  const JointState a = compensated_step(*num, s, ch, phi, c);
  const JointState b = pd_step(*num, s, h, c);
  EXPECT_EQ(a.primal, b.primal);
  EXPECT_EQ(a.dual, b.dual);
  // Zero sensitivity also reduces to the plain step.
  ch.h_dot_estimate = Vec::Ones(2);
  const JointState z = compensated_step(*num, s, ch, Mat::Zero(8, 2), c);
  EXPECT_EQ(z.primal, b.primal);
  EXPECT_EQ(z.dual, b.dual);
}

TEST(CompensatedStep, ExactSensitivityTracksMovingSaddle) {
  QuadToy p;
  const double dt = 0.01, kappa = 1.0, w = 2.0;
  const IntegratorConfig c = cfg_of(kappa, dt);
  Mat phi(2, 1);
  phi << 1.0, 0.0;
  JointState comp = st(0, 0), plain = st(0, 0);
  double worst_comp = 0.0, worst_plain = 0.0;
  double h_prev = 0.0;
  for (int k = 1; k <= 2000; ++k) {
    const double h = std::sin(w * k * dt);
    ChannelState ch = channel_with_rate(h, (h - h_prev) / dt);
    comp = compensated_step(p, comp, ch, phi, c);
    plain = pd_step(p, plain, hv(h), c);
    worst_comp = std::max(worst_comp, std::abs(comp.primal(0) - h));
    worst_plain = std::max(worst_plain, std::abs(plain.primal(0) - h));
    EXPECT_EQ(comp.dual(0), 0.0);
    h_prev = h;
  }
  // Lag of one step of the backward difference: O(dt |h'|).
  EXPECT_LT(worst_comp, 2.0 * dt * w);
  EXPECT_GT(worst_plain, 0.5);
}

TEST(CompensatedStep, RejectsBadSensitivity) {
  QuadToy p;
  const ChannelState ch = channel_with_rate(1.0, 0.5);
  EXPECT_THROW(compensated_step(p, st(0, 0), ch, Mat::Zero(1, 1), cfg_of(1, 0.1)), ConfigError);
  Mat bad(2, 1);
  bad << std::nan(""), 0.0;
  EXPECT_THROW(compensated_step(p, st(0, 0), ch, bad, cfg_of(1, 0.1)), NumericError);
}

TEST(DistributedStep, SingleGroupEqualsCentralized) {
  auto num = make_num(num_3node(), "num-3node");
  const ParameterVector h = (ParameterVector(2) << 0.8, 1.1).finished();
  const EquilibriumSolve eq = solve_saddle_frozen(*num, h, 1e-12, 200000);
  ASSERT_TRUE(eq.converged);
  JointState s = eq.x_star;
  s.primal.array() += 0.01;
  ChannelState ch = ChannelState::at(h);
  ch.h_dot_estimate = (Vec(2) << 0.3, -0.2).finished();
  const IntegratorConfig c = cfg_of(0.5, 0.02);
  const auto phi = phi_hat_matrix(*num, s, h);
  ASSERT_TRUE(phi.has_value());
  const JointState a = compensated_step(*num, s, ch, *phi, c);
  const JointState b = distributed_compensated_step(*num, s, ch, Partition::single(8), c);
  EXPECT_LT((a.stacked() - b.stacked()).norm(), 1e-12);
}

TEST(DistributedStep, SeparableProblemLosesNothing) {
  QuadToy p;
  Partition split;
  split.groups = {{0}, {1}};
  const JointState s = st(0.2, 0.3);
  const ParameterVector h = hv(0.5);
  const Mat central = *phi_hat_matrix(p, s, h);
  const Mat dist = distributed_phi(p, s, h, split);
  EXPECT_LT((central - dist).norm(), 1e-12);
  EXPECT_NEAR(dist(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(dist(1, 0), 0.0, 1e-12);
}

TEST(DistributedStep, NodePartitionIsValid) {
  auto num = make_num(num_3node(), "num-3node");
  const Partition part = num->node_partition();
  EXPECT_NO_THROW(part.validate(8));
  EXPECT_GE(part.groups.size(), 2u);
}

TEST(Partition, Validation) {
  Partition p;
  p.groups = {{0, 1}, {1}};
  EXPECT_THROW(p.validate(2), ConfigError);
  p.groups = {{0}, {}};
  EXPECT_THROW(p.validate(1), ConfigError);
  p.groups = {{0, 5}};
  EXPECT_THROW(p.validate(2), ConfigError);
  p.groups = {{0}};
  EXPECT_THROW(p.validate(2), ConfigError);
  EXPECT_NO_THROW(Partition::single(4).validate(4));
}

TEST(FlowMode, ParseRoundTrip) {
  for (FlowMode m : {FlowMode::Plain, FlowMode::Compensated, FlowMode::DistributedCompensated})
    EXPECT_EQ(parse_flow_mode(to_string(m)), m);
  EXPECT_THROW(parse_flow_mode("fast"), ConfigError);
}

TEST(Trajectory, ZeroExcitationAtSaddleStaysPut) {
  QuadToy p;
  const ChannelModel model = ChannelModel::isotropic(0.1, hv(2.0), Excitation::zero());
  IntegratorConfig c = cfg_of(1.0, 0.01);
  c.horizon = 5.0;
  TrajectoryOptions o;
  o.initial_h = hv(2.0);
  const TrajectoryRecord r = run_trajectory(p, model, c, RngStream(1, 0), o);
  ASSERT_EQ(r.size(), 501u);
  for (size_t i = 0; i < r.size(); ++i) {
    EXPECT_LT(r.err_joint[i], 1e-8);
    EXPECT_LT(r.err_z[i], 1e-8);
  }
}

TEST(Trajectory, DeterministicPerStream) {
  QuadToy p;
  const ChannelModel model = ChannelModel::normalized_fading(0.05, hv(1.0));
  IntegratorConfig c = cfg_of(2.0, 0.01);
  c.horizon = 10.0;
  c.stride = 10;
  const TrajectoryRecord a = run_trajectory(p, model, c, RngStream(3, 4));
  const TrajectoryRecord b = run_trajectory(p, model, c, RngStream(3, 4));
  const TrajectoryRecord d = run_trajectory(p, model, c, RngStream(3, 5));
  EXPECT_EQ(a.err_joint, b.err_joint);
  EXPECT_NE(a.err_joint, d.err_joint);
  EXPECT_EQ(a.size(), 101u);
  EXPECT_DOUBLE_EQ(a.dt_record, 0.1);
}

TEST(Trajectory, CompensatedBeatsPlainOnToy) {
  QuadToy p;
  const ChannelModel model = ChannelModel::normalized_fading(0.02, hv(1.0));
  IntegratorConfig c = cfg_of(2.0, 0.005);
  c.horizon = 200.0;
  c.stride = 10;
  double plain = 0.0, comp = 0.0;
  for (int s = 0; s < 4; ++s) {
    c.mode = FlowMode::Plain;
    const TrajectoryRecord a = run_trajectory(p, model, c, RngStream(8, s));
    c.mode = FlowMode::Compensated;
    const TrajectoryRecord b = run_trajectory(p, model, c, RngStream(8, s));
    for (size_t i = a.size() / 10; i < a.size(); ++i) {
      plain += a.err_joint[i];
      comp += b.err_joint[i];
    }
  }
  EXPECT_GT(plain, 0.0);
  EXPECT_LT(comp * 5.0, plain);
}
