#include "sptrack/flow.hpp"

#include <cmath>
#include <string>

#include "sptrack/equilibrium.hpp"
#include "sptrack/errors.hpp"

namespace sptrack {

const char* to_string(FlowMode m) {
  switch (m) {
    case FlowMode::Plain:
      return "plain";
    case FlowMode::Compensated:
      return "compensated";
    case FlowMode::DistributedCompensated:
      return "distributed-compensated";
  }
  return "?";
}

FlowMode parse_flow_mode(const std::string& s) {
  if (s == "plain") return FlowMode::Plain;
  if (s == "compensated") return FlowMode::Compensated;
  if (s == "distributed-compensated" || s == "distributed") return FlowMode::DistributedCompensated;
  throw ConfigError("unknown mode '" + s + "'");
}

Partition Partition::single(int total) {
  Partition p;
  p.groups.emplace_back();
  for (int i = 0; i < total; ++i) p.groups.back().push_back(i);
  return p;
}

void Partition::validate(int total) const {
  std::vector<int> seen(total, 0);
  for (const auto& g : groups) {
    if (g.empty()) throw ConfigError("partition: empty group");
    for (int i : g) {
      if (i < 0 || i >= total) throw ConfigError("partition: index " + std::to_string(i) + " out of range");
      seen[i]++;
    }
  }
  for (int i = 0; i < total; ++i)
    if (seen[i] != 1) throw ConfigError("partition: variable " + std::to_string(i) + " covered " +
                                        std::to_string(seen[i]) + " times");
}

void IntegratorConfig::validate() const {
  if (!(kappa > 0.0)) throw ConfigError("kappa must be positive");
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(horizon >= dt)) throw ConfigError("horizon must be at least dt");
  if (stride < 1) throw ConfigError("stride must be >= 1");
  if (noise_substeps < 1) throw ConfigError("noise_substeps must be >= 1");
  if (!(solve_tol > 0.0)) throw ConfigError("solve_tol must be positive");
}

long IntegratorConfig::steps() const { return std::lround(horizon / dt); }

namespace {

void require_finite(const JointState& s, long step) {
  if (!s.primal.allFinite() || !s.dual.allFinite())
    throw NumericError("non-finite state at step " + std::to_string(step), step);
}

// Shared update: x' = Pi(x + dt dx), lambda' from the dual direction.
JointState advance(const SaddleProblem& p, const JointState& s, const Vec& dx, const Vec& dl, double dt,
                   long step) {
  JointState out;
  out.primal = p.primal_set().project(s.primal + dt * dx);
  if (p.dual_set().kind() == SetKind::Orthant)
    out.dual = (s.dual + dt * positive_projection(dl, s.dual)).cwiseMax(0.0);
  else
    out.dual = p.dual_set().project(s.dual + dt * dl);
  require_finite(out, step);
  return out;
}

}  // namespace

JointState pd_step(const SaddleProblem& p, const JointState& s, const ParameterVector& h,
                   const IntegratorConfig& cfg, long step) {
  check_dimensions(p, s, h);
  Vec gx, gl;
  p.gradients(s, h, gx, gl);
  return advance(p, s, cfg.kappa * gx, -cfg.kappa * gl, cfg.dt, step);
}

JointState compensated_step(const SaddleProblem& p, const JointState& s, const ChannelState& ch,
                            const Mat& phi_hat, const IntegratorConfig& cfg, long step) {
  check_dimensions(p, s, ch.h);
  const Eigen::Index n = s.primal.size(), m = s.dual.size();
  if (phi_hat.rows() != n + m || phi_hat.cols() != ch.h.size())
    throw ConfigError("compensated_step: phi_hat has the wrong shape");
  if (!phi_hat.allFinite()) throw NumericError("compensated_step: non-finite phi_hat", step);
  const Vec& hdot = cfg.h_dot == HDotSource::Oracle ? ch.h_dot_true : ch.h_dot_estimate;
  Vec gx, gl;
  p.gradients(s, ch.h, gx, gl);
  const Vec c = phi_hat * hdot;
  return advance(p, s, cfg.kappa * gx + c.head(n), -cfg.kappa * gl + c.tail(m), cfg.dt, step);
}

Mat distributed_phi(const SaddleProblem& p, const JointState& s, const ParameterVector& h,
                    const Partition& partition, StepDiagnostics* diag) {
  const ResidualJacobian J = residual_jacobian(p, s, h, ResidualForm::Complementarity);
  Mat phi = Mat::Zero(J.B.rows(), h.size());
  for (const auto& g : partition.groups) {
    const auto block = block_phi(J, g);
    if (!block) {
      if (diag) diag->fallback_groups++;
      continue;
    }
    for (size_t r = 0; r < g.size(); ++r) phi.row(g[r]) = block->row(static_cast<Eigen::Index>(r));
  }
  return phi;
}

JointState distributed_compensated_step(const SaddleProblem& p, const JointState& s,
                                        const ChannelState& ch, const Partition& partition,
                                        const IntegratorConfig& cfg, StepDiagnostics* diag, long step) {
  partition.validate(static_cast<int>(s.size()));
  return compensated_step(p, s, ch, distributed_phi(p, s, ch.h, partition, diag), cfg, step);
}

TrajectoryRecord run_trajectory(const SaddleProblem& p, const ChannelModel& model,
                                const IntegratorConfig& cfg, RngStream rng, const TrajectoryOptions& opts) {
  cfg.validate();
  const Dimensions d = p.dims();
  if (model.q() != d.q) throw ConfigError("run_trajectory: channel dimension differs from problem q");
  const Partition partition = opts.partition ? *opts.partition : Partition::single(d.n + d.m);
  if (cfg.mode == FlowMode::DistributedCompensated) partition.validate(d.n + d.m);

  TrajectoryRecord rec;
  rec.strong = p.strong();
  rec.kappa = cfg.kappa;
  rec.dt = cfg.dt;
  rec.dt_record = cfg.dt * cfg.stride;

  const ParameterVector h0 = opts.initial_h ? *opts.initial_h : sample_stationary(model, rng);
  ChannelState ch = ChannelState::at(h0);
  const long max_solve = 2000000;
  EquilibriumSolve eq = solve_saddle_frozen(p, h0, cfg.solve_tol, max_solve,
                                            opts.initial_state ? &*opts.initial_state : nullptr);
  if (!eq.converged) throw TrajectoryAborted("saddle solve failed at the initial point", 0);
  JointState state = opts.initial_state ? *opts.initial_state : eq.x_star;
  check_dimensions(p, state, h0);

  Vec z_prev;
  ParameterVector h_prev = h0;
  auto record = [&](double t) {
    const Vec e = state.stacked() - eq.x_star.stacked();
    const Vec he = ch.h - model.h_bar();
    const double ej = e.squaredNorm();
    const double ep = e.head(d.n).squaredNorm();
    const double base = rec.strong ? ej : ep;
    Vec z(rec.strong ? e.size() + he.size() : d.n + he.size());
    if (rec.strong)
      z << e, he;
    else
      z << e.head(d.n), he;
    rec.time.push_back(t);
    rec.err_joint.push_back(ej);
    rec.err_primal.push_back(ep);
    rec.err_z.push_back(base + he.squaredNorm());
    rec.lyapunov.push_back(base / (2.0 * cfg.kappa) + 0.5 * he.squaredNorm());
    if (z_prev.size() == 0) {
      rec.u_rate_norm.push_back(0.0);
      rec.dz_sq.push_back(0.0);
    } else {
      const Vec u = (ch.h - h_prev) / rec.dt_record - model.drift(h_prev);
      rec.u_rate_norm.push_back(u.norm());
      rec.dz_sq.push_back((z - z_prev).squaredNorm());
    }
    z_prev = z;
    h_prev = ch.h;
    if (opts.probe) rec.probe.push_back(opts.probe(state, ch.h));
    if (cfg.record_vectors) {
      rec.states.push_back(state);
      rec.h.push_back(ch.h);
      rec.equilibria.push_back(eq.x_star);
    }
  };
  record(0.0);

  const long K = cfg.steps();
  StepDiagnostics diag;
  for (long k = 0; k < K; ++k) {
    ch = step_channel(model, ch, cfg.dt, rng, cfg.noise_substeps);
    rec.excitation.add(ch.last_noise);
    switch (cfg.mode) {
      case FlowMode::Plain:
        state = pd_step(p, state, ch.h, cfg, k);
        break;
      case FlowMode::Compensated: {
        std::optional<Mat> phi;
        if (cfg.phi_source == PhiSource::Equilibrium) {
          eq = solve_saddle_frozen(p, ch.h, cfg.solve_tol, max_solve, &eq.x_star);
          if (!eq.converged) throw TrajectoryAborted("saddle solve failed", k + 1);
          try {
            phi = ift_jacobian(p, eq, ch.h).phi;
          } catch (const SingularJacobianError&) {
            phi.reset();
          }
        } else {
          phi = phi_hat_matrix(p, state, ch.h);
        }
        if (!phi) {
          ++rec.compensation_fallbacks;
          phi = Mat::Zero(d.n + d.m, d.q);
        }
        state = compensated_step(p, state, ch, *phi, cfg, k);
        break;
      }
      case FlowMode::DistributedCompensated: {
        const int before = diag.fallback_groups;
        state = distributed_compensated_step(p, state, ch, partition, cfg, &diag, k);
        rec.compensation_fallbacks += diag.fallback_groups - before;
        break;
      }
    }
    if ((k + 1) % cfg.stride == 0) {
      eq = solve_saddle_frozen(p, ch.h, cfg.solve_tol, max_solve, &eq.x_star);
      if (!eq.converged)
        throw TrajectoryAborted("saddle solve failed at step " + std::to_string(k + 1) +
                                    " (residual " + std::to_string(eq.residual_norm) + ")",
                                k + 1);
      record(static_cast<double>(k + 1) * cfg.dt);
    }
  }
  rec.steps = K;
  return rec;
}

}  // namespace sptrack
