#pragma once

#include <Eigen/Dense>

namespace sptrack {

/// Euclidean projection onto {v >= 0, sum(v) <= cap}.
Eigen::VectorXd project_capped_simplex(const Eigen::VectorXd& w, double cap);

/// Nearest matrix in {M' >= 0, tr(M') <= budget}. M is symmetrized first.
Eigen::MatrixXcd project_trace_psd(const Eigen::MatrixXcd& M, double budget);

// Isometric real embedding of an order-N Hermitian matrix into N*N reals.
// Columns j = 0..N-1 in turn: the diagonal entry M(j,j), then for each row
// i > j the pair sqrt(2) Re M(i,j), sqrt(2) Im M(i,j). The Euclidean norm of
// the embedding equals the Frobenius norm, so gradients embed the same way.

Eigen::VectorXd hermitian_to_real(const Eigen::MatrixXcd& M);
Eigen::MatrixXcd real_to_hermitian(const Eigen::Ref<const Eigen::VectorXd>& v, int order);

/// project_trace_psd applied in embedded coordinates.
Eigen::VectorXd project_trace_psd_embedded(const Eigen::Ref<const Eigen::VectorXd>& v, int order,
                                           double budget);

}  // namespace sptrack
