#include "sptrack/projection.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "sptrack/errors.hpp"

namespace sptrack {

Eigen::VectorXd project_capped_simplex(const Eigen::VectorXd& w, double cap) {
  Eigen::VectorXd clipped = w.cwiseMax(0.0);
  if (clipped.sum() <= cap) return clipped;
  // Projection onto {v >= 0, sum v = cap}: v = max(w - tau, 0).
  std::vector<double> u(w.data(), w.data() + w.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double acc = 0.0, tau = 0.0;
  for (size_t k = 0; k < u.size(); ++k) {
    acc += u[k];
    const double t = (acc - cap) / static_cast<double>(k + 1);
    if (u[k] - t > 0.0) tau = t;
  }
  return (w.array() - tau).cwiseMax(0.0).matrix();
}

Eigen::MatrixXcd project_trace_psd(const Eigen::MatrixXcd& M, double budget) {
  if (M.rows() != M.cols()) throw ConfigError("project_trace_psd: matrix not square");
  if (!(budget > 0.0)) throw ConfigError("project_trace_psd: budget must be positive");
  const Eigen::MatrixXcd H = 0.5 * (M + M.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(H);
  if (eig.info() != Eigen::Success) throw NumericError("project_trace_psd: eigensolver failed");
  const Eigen::VectorXd v = project_capped_simplex(eig.eigenvalues(), budget);
  const Eigen::MatrixXcd& U = eig.eigenvectors();
  return U * v.cast<std::complex<double>>().asDiagonal() * U.adjoint();
}

Eigen::VectorXd hermitian_to_real(const Eigen::MatrixXcd& M) {
  const int N = static_cast<int>(M.rows());
  Eigen::VectorXd v(N * N);
  int k = 0;
  for (int j = 0; j < N; ++j) {
    v(k++) = M(j, j).real();
    for (int i = j + 1; i < N; ++i) {
      v(k++) = std::sqrt(2.0) * M(i, j).real();
      v(k++) = std::sqrt(2.0) * M(i, j).imag();
    }
  }
  return v;
}

Eigen::MatrixXcd real_to_hermitian(const Eigen::Ref<const Eigen::VectorXd>& v, int order) {
  if (v.size() != order * order) throw ConfigError("real_to_hermitian: size mismatch");
  Eigen::MatrixXcd M(order, order);
  int k = 0;
  for (int j = 0; j < order; ++j) {
    M(j, j) = v(k++);
    for (int i = j + 1; i < order; ++i) {
      const std::complex<double> z(v(k) / std::sqrt(2.0), v(k + 1) / std::sqrt(2.0));
      k += 2;
      M(i, j) = z;
      M(j, i) = std::conj(z);
    }
  }
  return M;
}

Eigen::VectorXd project_trace_psd_embedded(const Eigen::Ref<const Eigen::VectorXd>& v, int order,
                                           double budget) {
  return hermitian_to_real(project_trace_psd(real_to_hermitian(v, order), budget));
}

}  // namespace sptrack
