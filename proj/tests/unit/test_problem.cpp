#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sptrack/applications.hpp"
#include "sptrack/equilibrium.hpp"
#include "sptrack/errors.hpp"
#include "sptrack/problem.hpp"

using namespace sptrack;

namespace {

JointState st(double x, double l) { return JointState(Vec::Constant(1, x), Vec::Constant(1, l)); }
ParameterVector hv(double h) { return ParameterVector::Constant(1, h); }

std::shared_ptr<const NumProblem> num3() { return make_num(num_3node(10.0), "num-3node"); }

}  // namespace

TEST(QuadToyValue, ClosedForm) {
  QuadToy p;
  EXPECT_DOUBLE_EQ(eval_lagrangian(p, st(0, 0), hv(0)), 0.0);
  EXPECT_DOUBLE_EQ(eval_lagrangian(p, st(1, 0), hv(1)), 0.0);
  EXPECT_DOUBLE_EQ(eval_lagrangian(p, st(0, 2), hv(1)), 1.5);
}

TEST(QuadToyValue, DimensionMismatchThrows) {
  QuadToy p;
  EXPECT_THROW(eval_lagrangian(p, JointState(Vec::Zero(2), Vec::Zero(1)), hv(0)), ConfigError);
  EXPECT_THROW(eval_lagrangian(p, st(0, 0), ParameterVector::Zero(3)), ConfigError);
}

TEST(SaddleField, QuadToyExamples) {
  QuadToy p;
  Vec f = saddle_field(p, st(2.5, 0), hv(2.5), 1.0);
  EXPECT_NEAR(f.norm(), 0.0, 1e-15);
  f = saddle_field(p, st(0, 1), hv(1), 1.0);
  EXPECT_DOUBLE_EQ(f(0), 1.0);
  EXPECT_DOUBLE_EQ(f(1), -1.0);
  f = saddle_field(p, st(0, 0), hv(1), 1.0);
  EXPECT_DOUBLE_EQ(f(0), 1.0);
  EXPECT_DOUBLE_EQ(f(1), 0.0);
  f = saddle_field(p, st(0, 1), hv(1), 3.0);
  EXPECT_DOUBLE_EQ(f(0), 3.0);
  EXPECT_DOUBLE_EQ(f(1), -3.0);
}

TEST(PositiveProjection, Definition) {
  auto pp = [](double u, double l) {
    return positive_projection(Vec::Constant(1, u), Vec::Constant(1, l))(0);
  };
  EXPECT_EQ(pp(-1, 0), 0.0);
  EXPECT_EQ(pp(-1, 0.5), -1.0);
  EXPECT_EQ(pp(2, 0), 2.0);
  EXPECT_EQ(pp(0, 0), 0.0);
}

TEST(PositiveProjection, NeverPushesBoundaryOutward) {
  std::mt19937_64 g(3);
  std::normal_distribution<double> n;
  for (int t = 0; t < 200; ++t) {
    Vec u(4), l(4);
    for (int i = 0; i < 4; ++i) {
      u(i) = n(g);
      l(i) = (t % 2 == 0 && i % 2 == 0) ? 0.0 : std::abs(n(g));
    }
    const Vec r = positive_projection(u, l);
    for (int i = 0; i < 4; ++i) {
      if (l(i) == 0.0) EXPECT_GE(r(i), 0.0);
      else EXPECT_EQ(r(i), u(i));
    }
  }
}

TEST(EquilibriumResidual, QuadToy) {
  QuadToy p;
  EXPECT_NEAR(equilibrium_residual(p, st(-0.7, 0), hv(-0.7)).norm(), 0.0, 1e-15);
  const Vec r = equilibrium_residual(p, st(0, 0), hv(1));
  EXPECT_DOUBLE_EQ(r(0), 1.0);
  EXPECT_DOUBLE_EQ(r(1), 0.0);
}

TEST(EquilibriumResidual, NumAtSolvedSaddle) {
  auto p = num3();
  const ParameterVector h = ParameterVector::Ones(p->dims().q);
  const EquilibriumSolve eq = solve_saddle_frozen(*p, h, 1e-10, 200000);
  ASSERT_TRUE(eq.converged);
  EXPECT_LT(equilibrium_residual(*p, eq.x_star, h).norm(), 1e-8);
  EXPECT_LT(natural_residual(*p, eq.x_star, h).norm(), 1e-8);
}

TEST(EquilibriumResidual, ZeroIffNaturalResidualZero) {
  auto p = num3();
  const ParameterVector h = ParameterVector::Ones(p->dims().q);
  std::mt19937_64 g(5);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int t = 0; t < 50; ++t) {
    JointState s(Vec::NullaryExpr(3, [&](Eigen::Index) { return u(g); }),
                 Vec::NullaryExpr(5, [&](Eigen::Index) { return u(g) - 0.5; }).cwiseMax(0.0));
    const double a = equilibrium_residual(*p, s, h).norm();
    const double b = natural_residual(*p, s, h).norm();
    EXPECT_EQ(a < 1e-14, b < 1e-14);
  }
}

TEST(StackedGradient, MatchesFiniteDifferences) {
  auto p = num3();
  const ParameterVector h = (ParameterVector(2) << 0.8, 1.3).finished();
  std::mt19937_64 g(9);
  std::uniform_real_distribution<double> u(0.0, 1.5);
  for (int t = 0; t < 20; ++t) {
    JointState s(Vec::NullaryExpr(3, [&](Eigen::Index) { return u(g); }),
                 Vec::NullaryExpr(5, [&](Eigen::Index) { return u(g); }));
    const Vec gr = stacked_gradient(*p, s, h);
    Vec z = s.stacked();
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double d = 1e-6;
      Vec zp = z, zm = z;
      zp(i) += d;
      zm(i) -= d;
      const double fd = (eval_lagrangian(*p, JointState::from_stacked(zp, 3), h) -
                         eval_lagrangian(*p, JointState::from_stacked(zm, 3), h)) / (2 * d);
      EXPECT_NEAR(gr(i), fd, 1e-7);
    }
  }
}

TEST(ResidualJacobian, StructuredMatchesFiniteDifferenceOffKinks) {
  auto p = num3();
  const ParameterVector h = (ParameterVector(2) << 0.9, 1.1).finished();
  JointState s((Vec(3) << 0.4, 0.2, 0.7).finished(), (Vec(5) << 0.3, 0.6, 0.0, 0.1, 0.0).finished());
  const ResidualJacobian J = residual_jacobian(*p, s, h);
  const Vec z = s.stacked();
  const double d = 1e-7;
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    Vec zp = z, zm = z;
    zp(j) += d;
    zm(j) -= d;
    // Stay on the same side of the active pattern for dual entries at zero.
    if (j >= 3 && z(j) == 0.0) continue;
    const Vec col = (equilibrium_residual(*p, JointState::from_stacked(zp, 3), h) -
                     equilibrium_residual(*p, JointState::from_stacked(zm, 3), h)) / (2 * d);
    EXPECT_LT((J.B.col(j) - col).norm(), 1e-6) << "column " << j;
  }
  for (Eigen::Index j = 0; j < h.size(); ++j) {
    ParameterVector hp = h, hm = h;
    hp(j) += d;
    hm(j) -= d;
    const Vec col = (equilibrium_residual(*p, s, hp) - equilibrium_residual(*p, s, hm)) / (2 * d);
    EXPECT_LT((J.K.col(j) - col).norm(), 1e-6);
  }
}

TEST(Hessian, AnalyticMatchesFiniteDifference) {
  auto p = num3();
  const ParameterVector h = (ParameterVector(2) << 0.9, 1.4).finished();
  JointState s((Vec(3) << 0.4, 0.2, 0.7).finished(), (Vec(5) << 0.3, 0.6, 0.2, 0.1, 0.4).finished());
  EXPECT_LT((p->hessian(s, h) - fd_hessian(*p, s, h)).norm(), 1e-5);
  EXPECT_LT((p->mixed(s, h) - fd_mixed(*p, s, h)).norm(), 1e-5);
}

TEST(Moduli, QuadToyIsUnit) {
  QuadToy p;
  const Moduli m = estimate_moduli(p, hv(0.3), {st(0, 0), st(2, 1)});
  EXPECT_NEAR(m.M_x, 1.0, 1e-6);
  EXPECT_NEAR(m.M_lambda, 1.0, 1e-6);
}

TEST(Moduli, NumAtZeroRate) {
  auto p = num3();
  const ParameterVector h = ParameterVector::Ones(2);
  const Moduli m = estimate_moduli(*p, h, {JointState(Vec::Zero(3), Vec::Zero(5))});
  EXPECT_NEAR(m.M_x, 1.0, 1e-6);
  EXPECT_EQ(m.M_lambda, 0.0);
  EXPECT_FALSE(p->strong());
}

TEST(FeasibleSet, BoxAndOrthant) {
  const FeasibleSet b = FeasibleSet::box(Vec::Constant(2, -0.5), Vec::Constant(2, 3.0));
  const Vec pb = b.project((Vec(2) << -4.0, 7.0).finished());
  EXPECT_DOUBLE_EQ(pb(0), -0.5);
  EXPECT_DOUBLE_EQ(pb(1), 3.0);
  EXPECT_TRUE(b.contains(pb));
  const FeasibleSet o = FeasibleSet::orthant(3);
  const Vec po = o.project((Vec(3) << -1.0, 0.0, 2.0).finished());
  EXPECT_EQ(po, (Vec(3) << 0.0, 0.0, 2.0).finished());
  EXPECT_FALSE(o.contains((Vec(3) << -1e-3, 0.0, 0.0).finished()));
  const FeasibleSet u = FeasibleSet::unbounded(2);
  EXPECT_EQ(u.project(Vec::Constant(2, -9.0)), Vec::Constant(2, -9.0));
}

TEST(FeasibleSet, ProjectionIsIdempotentAndNonExpansive) {
  const FeasibleSet s = FeasibleSet::psd_balls(8, {{0, 2, 10.0}, {4, 2, 3.0}});
  std::mt19937_64 g(17);
  std::normal_distribution<double> n(0.0, 4.0);
  for (int t = 0; t < 100; ++t) {
    const Vec a = Vec::NullaryExpr(8, [&](Eigen::Index) { return n(g); });
    const Vec b = Vec::NullaryExpr(8, [&](Eigen::Index) { return n(g); });
    const Vec pa = s.project(a), pb = s.project(b);
    EXPECT_TRUE(s.contains(pa, 1e-9));
    EXPECT_LT((s.project(pa) - pa).norm(), 1e-10);
    EXPECT_LE((pa - pb).norm(), (a - b).norm() + 1e-10);
  }
}

TEST(FeasibleSet, BadBoxThrows) {
  EXPECT_THROW(FeasibleSet::box(Vec::Constant(2, 1.0), Vec::Constant(2, 0.0)), ConfigError);
  EXPECT_THROW(FeasibleSet::box(Vec::Zero(2), Vec::Ones(3)), ConfigError);
}

TEST(JointState, StackRoundTrip) {
  JointState s((Vec(2) << 1, 2).finished(), (Vec(3) << 3, 4, 5).finished());
  const Vec z = s.stacked();
  EXPECT_EQ(z.size(), 5);
  const JointState r = JointState::from_stacked(z, 2);
  EXPECT_EQ(r.primal, s.primal);
  EXPECT_EQ(r.dual, s.dual);
}
