#include <cmath>

#include "sptrack/applications.hpp"
#include "sptrack/errors.hpp"
#include "sptrack/projection.hpp"

namespace sptrack {

void JammingInstance::validate() const {
  if (antennas < 1) throw ConfigError("jamming: antenna count must be positive");
  if (!(p_t > 0.0) || !(p_j > 0.0) || !(noise > 0.0))
    throw ConfigError("jamming: P_T, P_J and noise power must be positive");
}

void jamming_channels(const JammingInstance& inst, const ParameterVector& h, CMat& H1, CMat& H2) {
  const int N = inst.antennas;
  const int half = 2 * N * N;
  if (h.size() != 2 * half) throw ConfigError("jamming: parameter dimension must be 4 N^2");
  H1.resize(N, N);
  H2.resize(N, N);
  for (int c = 0; c < 2 * N; ++c)
    for (int r = 0; r < N; ++r) {
      const int k = c * N + r;
      const std::complex<double> v(h(k), h(half + k));
      if (c < N)
        H1(r, c) = v;
      else
        H2(r, c - N) = v;
    }
}

ParameterVector jamming_parameter(const CMat& H1, const CMat& H2) {
  const int N = static_cast<int>(H1.rows());
  const int half = 2 * N * N;
  ParameterVector h(2 * half);
  for (int c = 0; c < 2 * N; ++c)
    for (int r = 0; r < N; ++r) {
      const std::complex<double> v = c < N ? H1(r, c) : H2(r, c - N);
      h(c * N + r) = v.real();
      h(half + c * N + r) = v.imag();
    }
  return h;
}

namespace {

double logdet_hpd(const CMat& M) {
  Eigen::LLT<CMat> llt(0.5 * (M + M.adjoint()));
  if (llt.info() != Eigen::Success) throw NumericError("jamming: covariance not positive definite");
  double s = 0.0;
  for (Eigen::Index i = 0; i < M.rows(); ++i) s += 2.0 * std::log(llt.matrixLLT()(i, i).real());
  return s;
}

CMat noise_plus_jamming(const JammingInstance& inst, const CMat& Z, const CMat& H2) {
  const int N = inst.antennas;
  return inst.noise * CMat::Identity(N, N) + H2 * Z * H2.adjoint();
}

}  // namespace

double jamming_capacity(const JammingInstance& inst, const CMat& Q, const CMat& Z, const CMat& H1,
                        const CMat& H2) {
  const CMat Nm = noise_plus_jamming(inst, Z, H2);
  const CMat S = Nm + H1 * Q * H1.adjoint();
  return logdet_hpd(S) - logdet_hpd(Nm);
}

std::pair<CMat, CMat> jamming_gradients(const JammingInstance& inst, const CMat& Q, const CMat& Z,
                                        const CMat& H1, const CMat& H2) {
  const CMat Nm = noise_plus_jamming(inst, Z, H2);
  const CMat S = Nm + H1 * Q * H1.adjoint();
  const CMat Si = S.inverse();
  const CMat Ni = Nm.inverse();
  CMat gQ = H1.adjoint() * Si * H1;
  CMat gZ = -(H2.adjoint() * (Ni - Si) * H2);
  gQ = 0.5 * (gQ + gQ.adjoint()).eval();
  gZ = 0.5 * (gZ + gZ.adjoint()).eval();
  if (!gQ.allFinite() || !gZ.allFinite()) throw NumericError("jamming: non-finite gradient");
  return {gQ, gZ};
}

JammingGame::JammingGame(JammingInstance inst) : inst_(inst) {
  inst_.validate();
  const int N = inst_.antennas;
  primal_ = FeasibleSet::psd_balls(N * N, {PsdBlock{0, N, inst_.p_t}});
  dual_ = FeasibleSet::psd_balls(N * N, {PsdBlock{0, N, inst_.p_j}});
}

Dimensions JammingGame::dims() const {
  const int N = inst_.antennas;
  return {N * N, N * N, 4 * N * N};
}

double JammingGame::value(const JointState& s, const ParameterVector& h) const {
  CMat H1, H2;
  jamming_channels(inst_, h, H1, H2);
  const int N = inst_.antennas;
  return jamming_capacity(inst_, real_to_hermitian(s.primal, N), real_to_hermitian(s.dual, N), H1, H2);
}

void JammingGame::gradients(const JointState& s, const ParameterVector& h, Vec& gx, Vec& gl) const {
  CMat H1, H2;
  jamming_channels(inst_, h, H1, H2);
  const int N = inst_.antennas;
  const auto [gQ, gZ] =
      jamming_gradients(inst_, real_to_hermitian(s.primal, N), real_to_hermitian(s.dual, N), H1, H2);
  gx = hermitian_to_real(gQ);
  gl = hermitian_to_real(gZ);
}

JointState JammingGame::initial_state(const ParameterVector&) const {
  const int N = inst_.antennas;
  const CMat I = CMat::Identity(N, N);
  return JointState(hermitian_to_real(inst_.p_t / N * I), hermitian_to_real(inst_.p_j / N * I));
}

std::shared_ptr<const JammingGame> make_jamming(const JammingInstance& inst) {
  return std::make_shared<const JammingGame>(inst);
}

}  // namespace sptrack
