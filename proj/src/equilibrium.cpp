#include "sptrack/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sptrack/batch.hpp"
#include "sptrack/errors.hpp"

namespace sptrack {

namespace {

JointState project_state(const SaddleProblem& p, const Vec& z, Eigen::Index n) {
  JointState s = JointState::from_stacked(z, n);
  s.primal = p.primal_set().project(s.primal);
  s.dual = p.dual_set().project(s.dual);
  return s;
}

double comp_norm(const SaddleProblem& p, const JointState& s, const ParameterVector& h) {
  return equilibrium_residual(p, s, h).norm();
}

// Plain Newton direction when B is usable, otherwise a Levenberg-Marquardt
// step with mu = ||F||. Degenerate active sets make B exactly singular even
// when the LU condition estimate looks harmless, hence the residual check.
Vec newton_direction(const Mat& B, const Vec& F) {
  Eigen::PartialPivLU<Mat> lu(B);
  if (lu.rcond() > 1e-14) {
    Vec d = lu.solve(-F);
    if (d.allFinite() && (B * d + F).norm() <= 1e-8 * (1.0 + F.norm())) return d;
  }
  const double mu = std::max(F.norm(), 1e-14);
  const Mat N = B.transpose() * B + mu * Mat::Identity(B.cols(), B.cols());
  return N.ldlt().solve(-B.transpose() * F);
}

// Semi-smooth Newton on the natural residual with backtracking. Returns true
// once the complementarity residual is below tol.
bool newton_phase(const SaddleProblem& p, const ParameterVector& h, JointState& s, double tol,
                  long& iters, long max_iter) {
  const Eigen::Index n = s.primal.size();
  for (int k = 0; k < 60 && iters < max_iter; ++k) {
    if (comp_norm(p, s, h) < tol) return true;
    const Vec F = natural_residual(p, s, h);
    const double f0 = F.norm();
    const Mat B = residual_jacobian(p, s, h, ResidualForm::Natural).B;
    Vec d = newton_direction(B, F);
    if (!d.allFinite()) return false;
    const Vec z = s.stacked();
    const double floor = 1e-14 * (1.0 + z.norm());
    bool accepted = false;
    double t = 1.0;
    for (int ls = 0; ls < 30; ++ls, t *= 0.5) {
      JointState c = project_state(p, z + t * d, n);
      const double f1 = natural_residual(p, c, h).norm();
      if (f1 <= (1.0 - 1e-4 * t) * f0 || f1 <= floor) {
        s = std::move(c);
        accepted = true;
        break;
      }
    }
    ++iters;
    if (!accepted) return comp_norm(p, s, h) < tol;
  }
  return comp_norm(p, s, h) < tol;
}

// Natural residual of the proximally regularized problem
// L(x, l) - |x - xa|^2 / 2tau + |l - la|^2 / 2tau, which is strongly
// concave-convex, so its semi-smooth Newton matrices are nonsingular even
// where the original active set is degenerate.
Vec prox_residual(const SaddleProblem& p, const Vec& z, const Vec& anchor, double tau,
                  const ParameterVector& h, Eigen::Index n) {
  const JointState s = JointState::from_stacked(z, n);
  Vec g = stacked_gradient(p, s, h);
  const Eigen::Index m = z.size() - n;
  g.head(n) -= (z.head(n) - anchor.head(n)) / tau;
  g.tail(m) += (z.tail(m) - anchor.tail(m)) / tau;
  Vec F(z.size());
  const FeasibleSet& X = p.primal_set();
  F.head(n) = X.kind() == SetKind::Unbounded ? Vec(g.head(n)) : Vec(X.project(s.primal + g.head(n)) - s.primal);
  const FeasibleSet& D = p.dual_set();
  if (D.kind() == SetKind::Unbounded)
    F.tail(m) = -g.tail(m);
  else
    F.tail(m) = D.project(s.dual - g.tail(m)) - s.dual;
  return F;
}

Mat prox_jacobian(const SaddleProblem& p, const Vec& z, const Vec& anchor, double tau,
                  const ParameterVector& h, Eigen::Index n) {
  const Eigen::Index N = z.size();
  const SetKind px = p.primal_set().kind(), dx = p.dual_set().kind();
  const bool coordinatewise = (px == SetKind::Unbounded || px == SetKind::Box) &&
                              (dx == SetKind::Unbounded || dx == SetKind::Orthant);
  Mat B(N, N);
  if (!coordinatewise) {
    const double d = fd_step(z);
    for (Eigen::Index j = 0; j < N; ++j) {
      Vec zp = z, zm = z;
      zp(j) += d;
      zm(j) -= d;
      B.col(j) = (prox_residual(p, zp, anchor, tau, h, n) - prox_residual(p, zm, anchor, tau, h, n)) / (2.0 * d);
    }
    return B;
  }
  const JointState s = JointState::from_stacked(z, n);
  Vec g = stacked_gradient(p, s, h);
  g.head(n) -= (z.head(n) - anchor.head(n)) / tau;
  g.tail(N - n) += (z.tail(N - n) - anchor.tail(N - n)) / tau;
  Mat H = p.hessian(s, h);
  H.diagonal().head(n).array() -= 1.0 / tau;
  H.diagonal().tail(N - n).array() += 1.0 / tau;
  B.setZero();
  const FeasibleSet& X = p.primal_set();
  for (Eigen::Index j = 0; j < n; ++j) {
    const double y = z(j) + g(j);
    if (px == SetKind::Box && (y < X.lower()(j) || y > X.upper()(j)))
      B(j, j) = -1.0;
    else
      B.row(j) = H.row(j);
  }
  for (Eigen::Index r = n; r < N; ++r) {
    if (dx == SetKind::Orthant && z(r) - g(r) < 0.0)
      B(r, r) = -1.0;
    else
      B.row(r) = -H.row(r);
  }
  return B;
}

// Proximal point outer loop with Newton inner solves and a growing tau.
bool proximal_phase(const SaddleProblem& p, const ParameterVector& h, JointState& s, double tol,
                    long& iters, long max_iter) {
  const Eigen::Index n = s.primal.size();
  double tau = 1.0;
  for (int outer = 0; outer < 40 && iters < max_iter; ++outer) {
    if (comp_norm(p, s, h) < tol) return true;
    const Vec anchor = s.stacked();
    Vec z = anchor;
    for (int k = 0; k < 40 && iters < max_iter; ++k) {
      const Vec F = prox_residual(p, z, anchor, tau, h, n);
      const double f0 = F.norm();
      if (f0 <= 1e-15 * (1.0 + z.norm())) break;
      const Vec d = newton_direction(prox_jacobian(p, z, anchor, tau, h, n), F);
      ++iters;
      if (!d.allFinite()) break;
      bool accepted = false;
      double t = 1.0;
      for (int ls = 0; ls < 30; ++ls, t *= 0.5) {
        const Vec c = project_state(p, z + t * d, n).stacked();
        if (prox_residual(p, c, anchor, tau, h, n).norm() <= (1.0 - 1e-4 * t) * f0) {
          z = c;
          accepted = true;
          break;
        }
      }
      if (!accepted) break;
    }
    s = JointState::from_stacked(z, n);
    tau = std::min(tau * 10.0, 1e12);
  }
  return comp_norm(p, s, h) < tol;
}

}  // namespace

EquilibriumSolve solve_saddle_frozen(const SaddleProblem& p, const ParameterVector& h, double tol,
                                     long max_iter, const JointState* warm_start) {
  if (!(tol > 0.0)) throw ConfigError("solve_saddle_frozen: tol must be positive");
  JointState s = warm_start ? *warm_start : p.initial_state(h);
  check_dimensions(p, s, h);
  s.primal = p.primal_set().project(s.primal);
  s.dual = p.dual_set().project(s.dual);

  EquilibriumSolve out;
  long iters = 0;
  double eta = 0.0;
  bool converged = false;
  while (iters < max_iter) {
    if (newton_phase(p, h, s, tol, iters, max_iter) || proximal_phase(p, h, s, tol, iters, max_iter)) {
      converged = true;
      break;
    }
    if (eta == 0.0) {
      const double curv = p.hessian(s, h).norm();
      eta = std::min(1.0, 0.5 / std::max(curv, 1e-12));
    }
    const double before = natural_residual(p, s, h).norm();
    const long chunk = std::min<long>(500, max_iter - iters);
    for (long k = 0; k < chunk; ++k) {
      Vec gx, gl;
      p.gradients(s, h, gx, gl);
      s.primal = p.primal_set().project(s.primal + eta * gx);
      s.dual = p.dual_set().project(s.dual - eta * gl);
    }
    iters += chunk;
    if (!s.primal.allFinite() || !s.dual.allFinite()) {
      s = p.initial_state(h);
      eta *= 0.25;
      continue;
    }
    if (natural_residual(p, s, h).norm() >= before) eta *= 0.5;
  }
  out.x_star = std::move(s);
  out.residual_norm = comp_norm(p, out.x_star, h);
  out.iterations = iters;
  out.converged = converged || out.residual_norm < tol;
  return out;
}

double spectral_norm(const Mat& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(M);
  return svd.singularValues()(0);
}

SensitivityJacobian ift_jacobian(const SaddleProblem& p, const EquilibriumSolve& eq, const ParameterVector& h) {
  if (!eq.converged) throw ConfigError("ift_jacobian: equilibrium not converged");
  const ResidualJacobian J = residual_jacobian(p, eq.x_star, h, ResidualForm::Complementarity);
  Eigen::JacobiSVD<Mat> svd(J.B, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1), smax = sv(0);
  const double cond = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
  if (!(cond <= 1e10)) throw SingularJacobianError("ift_jacobian: dF/dx~ is ill-conditioned", cond);
  SensitivityJacobian out;
  out.phi = -svd.solve(J.K);
  if (!out.phi.allFinite()) throw NumericError("ift_jacobian: non-finite sensitivity");
  const double res = (J.B * out.phi + J.K).norm();
  if (res > 1e-6 * (1.0 + J.K.norm()))
    throw SingularJacobianError("ift_jacobian: linear solve residual check failed", cond);
  const Eigen::Index n = eq.x_star.primal.size();
  out.phi_x = out.phi.topRows(n);
  out.norm = spectral_norm(out.phi);
  out.norm_x = spectral_norm(out.phi_x);
  out.cond_B = cond;
  return out;
}

std::optional<Mat> phi_hat_matrix(const SaddleProblem& p, const JointState& s, const ParameterVector& h) {
  const ResidualJacobian J = residual_jacobian(p, s, h, ResidualForm::Complementarity);
  Eigen::PartialPivLU<Mat> lu(J.B);
  if (!(lu.rcond() > 1e-10)) return std::nullopt;
  Mat phi = -lu.solve(J.K);
  if (!phi.allFinite()) return std::nullopt;
  return phi;
}

std::optional<SensitivityJacobian> estimate_phi_hat(const SaddleProblem& p, const JointState& s,
                                                    const ParameterVector& h) {
  const ResidualJacobian J = residual_jacobian(p, s, h, ResidualForm::Complementarity);
  Eigen::JacobiSVD<Mat> svd(J.B, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  if (!(smin > 1e-10 * sv(0))) return std::nullopt;
  SensitivityJacobian out;
  out.phi = -svd.solve(J.K);
  if (!out.phi.allFinite()) return std::nullopt;
  out.phi_x = out.phi.topRows(s.primal.size());
  out.norm = spectral_norm(out.phi);
  out.norm_x = spectral_norm(out.phi_x);
  out.cond_B = sv(0) / smin;
  return out;
}

std::optional<Mat> block_phi(const ResidualJacobian& J, const std::vector<int>& group) {
  const Mat Bg = J.B(group, group);
  const Mat Kg = J.K(group, Eigen::placeholders::all);
  Eigen::PartialPivLU<Mat> lu(Bg);
  if (!(lu.rcond() > 1e-10)) return std::nullopt;
  Mat phi = -lu.solve(Kg);
  if (!phi.allFinite()) return std::nullopt;
  return phi;
}

LipschitzEstimate estimate_lipschitz(const SaddleProblem& p, const EquilibriumSolve& eq,
                                     const ParameterVector& h, double radius, int samples,
                                     RngStream& rng) {
  const SensitivityJacobian base = ift_jacobian(p, eq, h);
  const Vec z0 = eq.x_star.stacked();
  const Eigen::Index n = eq.x_star.primal.size();
  LipschitzEstimate out;
  double sxy = 0.0, sxx = 0.0;
  for (int k = 0; k < samples; ++k) {
    Vec d = rng.normal_vector(static_cast<int>(z0.size()));
    d.normalize();
    const double rho = radius * (k + 1) / samples;
    const JointState s = project_state(p, z0 + rho * d, n);
    const double dz = (s.stacked() - z0).norm();
    if (dz <= 0.0) continue;
    const auto phi = phi_hat_matrix(p, s, h);
    if (!phi) continue;
    const double dphi = spectral_norm(*phi - base.phi);
    sxy += dz * dphi;
    sxx += dz * dz;
    out.max_ratio = std::max(out.max_ratio, dphi / dz);
    ++out.samples;
  }
  out.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  return out;
}

const char* to_string(StabilityCase c) { return c == StabilityCase::Strong ? "strong" : "degraded"; }

std::optional<double> StabilityConstants::tracking_bound(double alpha_sq_value) const {
  if (!(a3 > 0.0)) return std::nullopt;
  return a4 * a4 * gamma * gamma * alpha_sq_value / (a3 * a3);
}

StabilityConstants lyapunov_constants(StabilityCase c, double kappa, double M_x, double M_lambda,
                                      double lambda_max_A, double phi_sup, double phi_x_sup,
                                      double phi_A_sup, double phi_x_A_sup) {
  if (!(kappa > 0.0)) throw ConfigError("kappa must be positive");
  StabilityConstants k;
  k.stability_case = c;
  k.kappa = kappa;
  k.M_x = M_x;
  k.M_lambda = M_lambda;
  k.M = std::min(M_x, M_lambda);
  k.lambda_max_A = lambda_max_A;
  k.phi_sup = phi_sup;
  k.phi_x_sup = phi_x_sup;
  k.phi_A_sup = phi_A_sup;
  k.phi_x_A_sup = phi_x_A_sup;
  k.a1 = std::min(1.0 / (2.0 * kappa), 0.5);
  k.a2 = std::max(1.0 / (2.0 * kappa), 0.5);
  k.c1 = k.c2 = 1.0 / (2.0 * kappa);
  k.c3 = 2.0 * M_x;
  k.c4 = 1.0 / kappa;
  if (c == StabilityCase::Strong) {
    k.a3 = std::min(2.0 * k.M, -lambda_max_A) - phi_A_sup / kappa;
    k.a4 = std::max(1.0 / kappa, 1.0);
    k.gamma0 = phi_sup;
  } else {
    k.a3 = std::min(2.0 * M_x, -lambda_max_A) - phi_x_A_sup / kappa;
    k.a4 = std::sqrt(std::max(1.0 / (kappa * kappa), 1.0));
    k.gamma0 = phi_x_sup;
  }
  k.gamma = std::sqrt(k.gamma0 * k.gamma0 + 1.0);
  k.condition_violated = !(k.a3 > 0.0);
  return k;
}

SensitivitySample sample_sensitivity(const SaddleProblem& p, const ChannelModel& model,
                                     const ParameterVector& h, const JointState* warm) {
  SensitivitySample out;
  out.solve = solve_saddle_frozen(p, h, 1e-11, 2000000, warm);
  if (!out.solve.converged) return out;
  try {
    const SensitivityJacobian J = ift_jacobian(p, out.solve, h);
    out.phi_norm = J.norm;
    out.phi_x_norm = J.norm_x;
    out.phi_A_norm = spectral_norm(J.phi * model.A());
    out.phi_x_A_norm = spectral_norm(J.phi_x * model.A());
    const Moduli mod = estimate_moduli(p, h, {out.solve.x_star});
    out.M_x = mod.M_x;
    out.M_lambda = mod.M_lambda;
    out.ok = true;
  } catch (const NumericError&) {
    out.ok = false;
  }
  return out;
}

StabilityConstants fold_constants(const SaddleProblem& p, const ChannelModel& model, double kappa,
                                  const std::vector<SensitivitySample>& samples) {
  double phi = 0.0, phix = 0.0, phiA = 0.0, phixA = 0.0;
  double mx = std::numeric_limits<double>::infinity(), ml = mx;
  int ok = 0;
  for (const auto& s : samples) {
    if (!s.ok) continue;
    ++ok;
    phi = std::max(phi, s.phi_norm);
    phix = std::max(phix, s.phi_x_norm);
    phiA = std::max(phiA, s.phi_A_norm);
    phixA = std::max(phixA, s.phi_x_A_norm);
    mx = std::min(mx, s.M_x);
    ml = std::min(ml, s.M_lambda);
  }
  if (ok == 0) throw NumericError("stability_constants: no sample produced a usable saddle point");
  const StabilityCase c = p.strong() ? StabilityCase::Strong : StabilityCase::Degraded;
  StabilityConstants k = lyapunov_constants(c, kappa, mx, ml, model.lambda_max_A(), phi, phix, phiA, phixA);
  k.alpha_sq = model.alpha_sq();
  k.beta = model.beta();
  k.samples = ok;
  k.failed_samples = static_cast<int>(samples.size()) - ok;
  return k;
}

StabilityConstants stability_constants(const SaddleProblem& p, const ChannelModel& model, double kappa,
                                       const std::vector<ParameterVector>& sampled_h,
                                       const ConstantsOptions& opts) {
  if (sampled_h.empty()) throw ConfigError("stability_constants: no parameter samples");
  const std::vector<SensitivitySample> samples = sample_sensitivities(p, model, sampled_h);
  StabilityConstants k = fold_constants(p, model, kappa, samples);
  if (opts.lipschitz) {
    for (size_t i = 0; i < samples.size(); ++i) {
      if (!samples[i].ok) continue;
      RngStream rng(opts.seed, 0x11b);
      const double r = opts.lipschitz_radius * (1.0 + samples[i].solve.x_star.stacked().norm());
      k.lipschitz_L = estimate_lipschitz(p, samples[i].solve, sampled_h[i], r, opts.lipschitz_samples, rng).slope;
      break;
    }
  }
  return k;
}

Verdict condition_check(const StabilityConstants& c, double kappa) {
  Verdict v;
  v.stability_case = c.stability_case;
  if (c.stability_case == StabilityCase::Strong)
    v.margin = kappa * std::min(2.0 * c.M, -c.lambda_max_A) - c.phi_A_sup;
  else
    v.margin = kappa * std::min(2.0 * c.M_x, -c.lambda_max_A) - c.phi_x_A_sup;
  v.pass = v.margin > 0.0;
  return v;
}

std::vector<ParameterVector> draw_parameters(const ChannelModel& model, int count, std::uint64_t seed) {
  RngStream rng(seed, 0xd1a);
  std::vector<ParameterVector> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) out.push_back(sample_stationary(model, rng));
  return out;
}

}  // namespace sptrack
