#pragma once

#include <Eigen/Core>

#include "mlti/dense_tensor.hpp"

namespace mlti {

/// S-transpose: output shape (J_{S(1)},...,J_{S(N)}) with
/// X^S_{j_{S(1)}...j_{S(N)}} = X_{j1...jN}. Pure data movement.
DenseTensor s_transpose(const DenseTensor& x, const Permutation& s);

/// rc-unfolding: rows and cols partition {1,...,N} (both nonempty); entry
/// (p,q) is X^S at the row/col sub-tuples with p = ivec over the row extents
/// and q = ivec over the column extents. Returns an order-2 tensor.
DenseTensor rc_unfold(const DenseTensor& x, const std::vector<Index>& row_modes,
                      const std::vector<Index>& col_modes);

/// n-mode matricization X_(n): mode n first, remaining modes in original
/// order. For order-1 tensors this is the (J,1) column.
DenseTensor n_mode_matricize(const DenseTensor& x, Index n);

/// Matrix tensor multiplication X x_n A; satisfies (X x_n A)_(n) = A X_(n).
DenseTensor n_mode_product(const DenseTensor& x, const Eigen::MatrixXd& a, Index n);

/// Tucker product X x_1 A_1 x_2 ... x_N A_N.
DenseTensor tucker_product(const DenseTensor& x, const std::vector<Eigen::MatrixXd>& mats);

} // namespace mlti
