#include "sptrack/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sptrack/errors.hpp"
#include "sptrack/projection.hpp"

namespace sptrack {

Vec JointState::stacked() const {
  Vec z(size());
  z << primal, dual;
  return z;
}

JointState JointState::from_stacked(const Vec& z, Eigen::Index n) {
  return JointState(z.head(n), z.tail(z.size() - n));
}

FeasibleSet FeasibleSet::unbounded(int dim) {
  FeasibleSet s;
  s.kind_ = SetKind::Unbounded;
  s.dim_ = dim;
  return s;
}

FeasibleSet FeasibleSet::orthant(int dim) {
  FeasibleSet s;
  s.kind_ = SetKind::Orthant;
  s.dim_ = dim;
  return s;
}

FeasibleSet FeasibleSet::box(Vec lower, Vec upper) {
  if (lower.size() != upper.size()) throw ConfigError("box bounds differ in size");
  if ((lower.array() > upper.array()).any()) throw ConfigError("box lower bound exceeds upper");
  FeasibleSet s;
  s.kind_ = SetKind::Box;
  s.dim_ = static_cast<int>(lower.size());
  s.lower_ = std::move(lower);
  s.upper_ = std::move(upper);
  return s;
}

FeasibleSet FeasibleSet::psd_balls(int dim, std::vector<PsdBlock> blocks) {
  std::vector<int> used(dim, 0);
  for (const auto& b : blocks) {
    if (b.order <= 0 || !(b.budget > 0.0)) throw ConfigError("invalid PSD block");
    if (b.offset < 0 || b.offset + b.order * b.order > dim)
      throw ConfigError("PSD block outside the coordinate range");
    for (int k = 0; k < b.order * b.order; ++k) used[b.offset + k]++;
  }
  for (int u : used)
    if (u != 1) throw ConfigError("PSD blocks must cover every coordinate exactly once");
  FeasibleSet s;
  s.kind_ = SetKind::PsdTraceBalls;
  s.dim_ = dim;
  s.blocks_ = std::move(blocks);
  return s;
}

Vec FeasibleSet::project(const Vec& v) const {
  if (v.size() != dim_) throw ConfigError("projection: dimension mismatch");
  switch (kind_) {
    case SetKind::Unbounded:
      return v;
    case SetKind::Orthant:
      return v.cwiseMax(0.0);
    case SetKind::Box:
      return v.cwiseMax(lower_).cwiseMin(upper_);
    case SetKind::PsdTraceBalls: {
      Vec out(v.size());
      for (const auto& b : blocks_) {
        const int len = b.order * b.order;
        out.segment(b.offset, len) = project_trace_psd_embedded(v.segment(b.offset, len), b.order, b.budget);
      }
      return out;
    }
  }
  return v;
}

bool FeasibleSet::contains(const Vec& v, double tol) const {
  if (v.size() != dim_ || !v.allFinite()) return false;
  switch (kind_) {
    case SetKind::Unbounded:
      return true;
    case SetKind::Orthant:
      return (v.array() >= -tol).all();
    case SetKind::Box:
      return (v.array() >= lower_.array() - tol).all() && (v.array() <= upper_.array() + tol).all();
    case SetKind::PsdTraceBalls:
      return (project(v) - v).norm() <= tol * (1.0 + v.norm());
  }
  return false;
}

Mat SaddleProblem::hessian(const JointState& s, const ParameterVector& h) const {
  return fd_hessian(*this, s, h);
}

Mat SaddleProblem::mixed(const JointState& s, const ParameterVector& h) const {
  return fd_mixed(*this, s, h);
}

JointState SaddleProblem::initial_state(const ParameterVector&) const {
  const Dimensions d = dims();
  return JointState(primal_set().project(Vec::Zero(d.n)), dual_set().project(Vec::Zero(d.m)));
}

void check_dimensions(const SaddleProblem& p, const JointState& s, const ParameterVector& h) {
  const Dimensions d = p.dims();
  if (s.primal.size() != d.n || s.dual.size() != d.m || h.size() != d.q) {
    throw ConfigError(p.name() + ": dimension mismatch (expected n=" + std::to_string(d.n) +
                      " m=" + std::to_string(d.m) + " q=" + std::to_string(d.q) + ", got " +
                      std::to_string(s.primal.size()) + "/" + std::to_string(s.dual.size()) + "/" +
                      std::to_string(h.size()) + ")");
  }
}

double eval_lagrangian(const SaddleProblem& p, const JointState& s, const ParameterVector& h) {
  check_dimensions(p, s, h);
  return p.value(s, h);
}

namespace {

void require_finite(const Vec& v, const char* what) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v(i))) throw NumericError(std::string(what) + ": non-finite entry " + std::to_string(i), i);
  }
}

Vec primal_block(const FeasibleSet& X, const Vec& x, const Vec& gx) {
  if (X.kind() == SetKind::Unbounded) return gx;
  return X.project(x + gx) - x;
}

}  // namespace

Vec stacked_gradient(const SaddleProblem& p, const JointState& s, const ParameterVector& h) {
  Vec gx, gl;
  p.gradients(s, h, gx, gl);
  Vec g(gx.size() + gl.size());
  g << gx, gl;
  require_finite(g, "gradient");
  return g;
}

Vec positive_projection(const Vec& direction, const Vec& dual) {
  if (direction.size() != dual.size()) throw ConfigError("positive_projection: dimension mismatch");
  Vec out(direction.size());
  for (Eigen::Index i = 0; i < direction.size(); ++i)
    out(i) = (direction(i) > 0.0 || dual(i) > 0.0) ? direction(i) : 0.0;
  return out;
}

Vec saddle_field(const SaddleProblem& p, const JointState& s, const ParameterVector& h, double kappa) {
  check_dimensions(p, s, h);
  const Eigen::Index n = s.primal.size();
  const Vec g = stacked_gradient(p, s, h);
  Vec f(g.size());
  f.head(n) = kappa * g.head(n);
  const Vec down = -g.tail(g.size() - n);
  if (p.dual_set().kind() == SetKind::Orthant)
    f.tail(g.size() - n) = kappa * positive_projection(down, s.dual);
  else
    f.tail(g.size() - n) = kappa * down;
  return f;
}

Vec equilibrium_residual(const SaddleProblem& p, const JointState& s, const ParameterVector& h) {
  check_dimensions(p, s, h);
  const Eigen::Index n = s.primal.size(), m = s.dual.size();
  const Vec g = stacked_gradient(p, s, h);
  Vec F(n + m);
  F.head(n) = primal_block(p.primal_set(), s.primal, g.head(n));
  const FeasibleSet& D = p.dual_set();
  const Vec gl = g.tail(m);
  if (D.kind() == SetKind::Orthant) {
    for (Eigen::Index i = 0; i < m; ++i) {
      const bool active = s.dual(i) <= 0.0 && -gl(i) < 0.0;
      F(n + i) = active ? s.dual(i) * gl(i) : -gl(i);
    }
  } else if (D.kind() == SetKind::Unbounded) {
    F.tail(m) = -gl;
  } else {
    F.tail(m) = D.project(s.dual - gl) - s.dual;
  }
  require_finite(F, "equilibrium_residual");
  return F;
}

Vec natural_residual(const SaddleProblem& p, const JointState& s, const ParameterVector& h) {
  check_dimensions(p, s, h);
  const Eigen::Index n = s.primal.size(), m = s.dual.size();
  const Vec g = stacked_gradient(p, s, h);
  Vec F(n + m);
  F.head(n) = primal_block(p.primal_set(), s.primal, g.head(n));
  const FeasibleSet& D = p.dual_set();
  if (D.kind() == SetKind::Unbounded)
    F.tail(m) = -g.tail(m);
  else
    F.tail(m) = D.project(s.dual - g.tail(m)) - s.dual;
  return F;
}

double fd_step(const Vec& at) { return 1e-5 * (1.0 + at.norm()); }

Mat fd_hessian(const SaddleProblem& p, const JointState& s, const ParameterVector& h) {
  const Eigen::Index n = s.primal.size();
  const Vec z = s.stacked();
  const double d = fd_step(z);
  Mat H(z.size(), z.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    Vec zp = z, zm = z;
    zp(j) += d;
    zm(j) -= d;
    H.col(j) = (stacked_gradient(p, JointState::from_stacked(zp, n), h) -
                stacked_gradient(p, JointState::from_stacked(zm, n), h)) / (2.0 * d);
  }
  return H;
}

Mat fd_mixed(const SaddleProblem& p, const JointState& s, const ParameterVector& h) {
  const double d = fd_step(h);
  Mat J(s.size(), h.size());
  for (Eigen::Index j = 0; j < h.size(); ++j) {
    ParameterVector hp = h, hm = h;
    hp(j) += d;
    hm(j) -= d;
    J.col(j) = (stacked_gradient(p, s, hp) - stacked_gradient(p, s, hm)) / (2.0 * d);
  }
  return J;
}

namespace {

bool structured(const SaddleProblem& p) {
  const SetKind px = p.primal_set().kind(), dx = p.dual_set().kind();
  return (px == SetKind::Unbounded || px == SetKind::Box) &&
         (dx == SetKind::Orthant || dx == SetKind::Unbounded);
}

Vec residual_of(const SaddleProblem& p, const JointState& s, const ParameterVector& h, ResidualForm f) {
  return f == ResidualForm::Natural ? natural_residual(p, s, h) : equilibrium_residual(p, s, h);
}

}  // namespace

ResidualJacobian residual_jacobian(const SaddleProblem& p, const JointState& s,
                                   const ParameterVector& h, ResidualForm form) {
  check_dimensions(p, s, h);
  const Eigen::Index n = s.primal.size(), m = s.dual.size(), N = n + m;
  ResidualJacobian J;
  if (!structured(p)) {
    // Piecewise-smooth projections: difference the residual map itself.
    const Vec z = s.stacked();
    const double dz = fd_step(z), dh = fd_step(h);
    J.B.resize(N, N);
    J.K.resize(N, h.size());
    for (Eigen::Index j = 0; j < N; ++j) {
      Vec zp = z, zm = z;
      zp(j) += dz;
      zm(j) -= dz;
      J.B.col(j) = (residual_of(p, JointState::from_stacked(zp, n), h, form) -
                    residual_of(p, JointState::from_stacked(zm, n), h, form)) / (2.0 * dz);
    }
    for (Eigen::Index j = 0; j < h.size(); ++j) {
      ParameterVector hp = h, hm = h;
      hp(j) += dh;
      hm(j) -= dh;
      J.K.col(j) = (residual_of(p, s, hp, form) - residual_of(p, s, hm, form)) / (2.0 * dh);
    }
    return J;
  }

  const Vec g = stacked_gradient(p, s, h);
  const Mat H = p.hessian(s, h);
  const Mat X = p.mixed(s, h);
  J.B = Mat::Zero(N, N);
  J.K = Mat::Zero(N, h.size());
  const FeasibleSet& P = p.primal_set();
  for (Eigen::Index j = 0; j < n; ++j) {
    bool saturated = false;
    if (P.kind() == SetKind::Box) {
      const double y = s.primal(j) + g(j);
      saturated = y < P.lower()(j) || y > P.upper()(j);
    }
    if (saturated) {
      J.B(j, j) = -1.0;
    } else {
      J.B.row(j) = H.row(j);
      J.K.row(j) = X.row(j);
    }
  }
  const bool orthant = p.dual_set().kind() == SetKind::Orthant;
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index r = n + i;
    const double lam = s.dual(i), gi = g(r);
    if (orthant && form == ResidualForm::Complementarity && lam <= 0.0 && -gi < 0.0) {
      J.B.row(r) = lam * H.row(r);
      J.B(r, r) += gi;
      J.K.row(r) = lam * X.row(r);
    } else if (orthant && form == ResidualForm::Natural && lam - gi < 0.0) {
      J.B(r, r) = -1.0;
    } else {
      J.B.row(r) = -H.row(r);
      J.K.row(r) = -X.row(r);
    }
  }
  return J;
}

Moduli estimate_moduli(const SaddleProblem& p, const ParameterVector& h,
                       const std::vector<JointState>& samples) {
  if (samples.empty()) throw ConfigError("estimate_moduli: no sample states");
  const Dimensions d = p.dims();
  Moduli out;
  double mx = std::numeric_limits<double>::infinity();
  double ml = std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    check_dimensions(p, s, h);
    const Mat H = p.hessian(s, h);
    const Mat Hxx = 0.5 * (H.topLeftCorner(d.n, d.n) + H.topLeftCorner(d.n, d.n).transpose());
    Eigen::SelfAdjointEigenSolver<Mat> ex(Hxx, Eigen::EigenvaluesOnly);
    mx = std::min(mx, -ex.eigenvalues().maxCoeff());
    if (d.m > 0) {
      const Mat Hll = 0.5 * (H.bottomRightCorner(d.m, d.m) + H.bottomRightCorner(d.m, d.m).transpose());
      Eigen::SelfAdjointEigenSolver<Mat> el(Hll, Eigen::EigenvaluesOnly);
      ml = std::min(ml, el.eigenvalues().minCoeff());
    } else {
      ml = 0.0;
    }
  }
  out.samples = static_cast<int>(samples.size());
  out.primal_indefinite = !(mx > 0.0);
  out.M_x = std::max(mx, 0.0);
  out.M_lambda = std::max(ml, 0.0);
  return out;
}

}  // namespace sptrack
