#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "mlti/linalg.hpp"
#include "mlti/paired.hpp"

namespace mlti {

/// Einstein product A * X: contraction over the second index of each pair.
/// X must match A's column shape; the result has A's row shape.
DenseTensor einstein_apply(const EvenPairedTensor& a, const DenseTensor& x);

/// Einstein product A * B of two even-order paired tensors.
EvenPairedTensor einstein_compose(const EvenPairedTensor& a, const EvenPairedTensor& b);

/// A composed with itself k times (k >= 0; k = 0 gives the U-identity).
EvenPairedTensor einstein_power(const EvenPairedTensor& a, Index k);

/// The unfolding isomorphism: A_{j1 i1 ... jN iN} -> M_{ivec(j), ivec(i)}.
/// Pure relabeling; phi(A * B) = phi(A) phi(B).
Eigen::MatrixXd phi(const EvenPairedTensor& a);
EvenPairedTensor phi_inverse(const Eigen::MatrixXd& m, const PairedShape& pshape);

/// U-transpose: pair roles swapped; phi(A^T) = phi(A)^T bitwise.
EvenPairedTensor u_transpose(const EvenPairedTensor& a);

/// True when a equals its own U-transpose to the given relative tolerance.
bool is_weakly_symmetric(const EvenPairedTensor& a, double tol = 1e-10);

EvenPairedTensor u_identity(const Shape& j);

/// U-diagonal tensor with the entries of diag on the (j,j,...,j,j) diagonal.
EvenPairedTensor u_diagonal(const DenseTensor& diag);

/// U-inverse of a square tensor; throws SingularError when phi(a) is
/// numerically singular at the rank tolerance.
EvenPairedTensor u_inverse(const EvenPairedTensor& a);

/// Numerical rank of phi(a): singular values above tol * sigma_max * max(dims).
Index unfolding_rank(const EvenPairedTensor& a, double tol = linalg::kRankTol);

/// det(phi(a)) of a square tensor.
double unfolding_det(const EvenPairedTensor& a);

/// Quadratic-form positive definiteness: minimum eigenvalue of the symmetric
/// part of phi(a) strictly above tol.
bool is_u_positive_definite(const EvenPairedTensor& a, double tol = 0.0);

enum class ProbeResult { Falsified, NotFalsified };

/// One-sided M-positive-definiteness probe: evaluates X^T * A * X on random
/// rank-one tensors X = x1 o ... o xN. Falsified when any value is <= 0.
ProbeResult m_positive_probe(const EvenPairedTensor& a, Index trials, std::uint64_t rng_seed);

/// U-eigenpair: complex eigenvalue with the eigentensor split into real and
/// imaginary parts, normalized to unit Frobenius norm.
struct UEigenPair {
    std::complex<double> value;
    DenseTensor tensor_re;
    DenseTensor tensor_im;
};

/// All U-eigenpairs of a square tensor, sorted by descending |lambda|, ties
/// by descending real part then descending imaginary part.
std::vector<UEigenPair> u_eigen(const EvenPairedTensor& a);

/// Spectral radius max |lambda| of a square tensor.
double u_spectral_radius(const EvenPairedTensor& a);

/// a - lambda * I for square a.
EvenPairedTensor subtract_scaled_identity(const EvenPairedTensor& a, double lambda);

/// Matrix-free biconjugate-gradient solve of a * x = rhs using only Einstein
/// products with a and a^T. Throws ConvergenceError on breakdown or when
/// max_iter is exhausted (max_iter <= 0 picks a size-based default).
DenseTensor hobg_solve(const EvenPairedTensor& a, const DenseTensor& rhs, double tol = 1e-10,
                       Index max_iter = 0);

/// Higher-order Rayleigh quotient iteration for a real eigenpair. The shifted
/// solves run through the HOBG iteration; an exactly singular shift is
/// handled by perturbing lambda by 1e-10 * (1 + |lambda|).
UEigenPair horqi(const EvenPairedTensor& a, const DenseTensor& x0, double tol = 1e-10,
                 Index max_iter = 50);

} // namespace mlti
