#pragma once

#include <Eigen/Core>

#include "mlti/dense_tensor.hpp"

namespace mlti::linalg {

/// Default relative tolerance for numerical rank decisions (2^-45).
inline constexpr double kRankTol = 2.842170943040401e-14;

/// View an order-<=2 tensor as a column-major matrix (order 0 -> 1x1,
/// order 1 -> Jx1). No copy; the tensor must outlive the map.
Eigen::Map<const Eigen::MatrixXd> as_matrix(const DenseTensor& t);

DenseTensor from_matrix(const Eigen::MatrixXd& m);

/// Singular values of m, descending. Uses an LQ reduction first when the
/// matrix is very wide so that step matrices in TT-SVD stay cheap.
Eigen::VectorXd singular_values(const Eigen::MatrixXd& m);

/// Count of singular values above tol * sigma_max * max(rows, cols).
Index rank_from_singular_values(const Eigen::VectorXd& sv, Index rows, Index cols, double tol);

Index numerical_rank(const Eigen::MatrixXd& m, double tol = kRankTol);

struct ThinSvd {
    Eigen::MatrixXd u;  // rows x k
    Eigen::VectorXd s;  // k, descending
    Eigen::MatrixXd v;  // cols x k
};

/// Thin SVD with the wide case reduced through a QR of the transpose.
/// Singular-vector signs are fixed so each column of u has its
/// largest-magnitude entry positive.
ThinSvd thin_svd(const Eigen::MatrixXd& m);

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

} // namespace mlti::linalg
