#pragma once

#include <cstdint>
#include <vector>

#include "mlti/einstein.hpp"
#include "mlti/linalg.hpp"
#include "mlti/paired.hpp"

namespace mlti {

/// Higher-order SVD: X = S x_1 U1 ... x_N UN with square orthogonal factors,
/// an all-orthogonal ordered core, and per-mode singular values gamma^(n).
struct HosvdResult {
    DenseTensor core;
    std::vector<Eigen::MatrixXd> factors;
    std::vector<Eigen::VectorXd> singular_values; // length Jn per mode, descending

    DenseTensor reconstruct() const;
};

HosvdResult hosvd(const DenseTensor& x);

/// Numerical rank of every n-mode matricization.
std::vector<Index> multilinear_ranks(const DenseTensor& x, double tol = linalg::kRankTol);

struct CpOptions {
    Index max_iter = 500;
    double fit_tol = 1e-8; // stop when the fit improves by less than this
    Index restarts = 3;
    std::uint64_t seed = 0;
};

/// CP decomposition with descending positive weights and unit-norm columns.
struct CpFactors {
    Eigen::VectorXd weights;
    std::vector<Eigen::MatrixXd> factors;
    double fit = 0.0; // 1 - ||X - Xhat|| / ||X||

    Index rank() const { return weights.size(); }
    DenseTensor reconstruct() const;
};

/// Alternating least squares; best fit over opts.restarts seeded restarts.
/// Warns (fit only) rather than failing when r exceeds the generic maximal
/// CP rank bound min_n prod_{m != n} Jm.
CpFactors cp_als(const DenseTensor& x, Index r, const CpOptions& opts = {});

/// Tensor train cores X^(n) of shape R_{n-1} x Jn x Rn with R0 = RN = 1.
struct TtCores {
    std::vector<DenseTensor> cores;
    std::vector<Index> ranks;

    Index order() const { return static_cast<Index>(cores.size()); }
    Shape mode_shape() const;
    DenseTensor reconstruct() const;
};

/// TT-SVD with relative accuracy eps: reconstruction error <= eps * ||X||,
/// per-step threshold eps * ||X|| / sqrt(N-1).
TtCores tt_svd(const DenseTensor& x, double eps);

/// TT-SVD with zero truncation: ranks are the numerical ranks of the
/// sequential reshape unfoldings at the given relative tolerance.
TtCores tt_svd_exact(const DenseTensor& x, double tol = linalg::kRankTol);

/// Make cores 1..upto left-orthonormal (upto <= order-1); the represented
/// tensor is unchanged.
TtCores tt_left_orthonormalize(TtCores t, Index upto);

/// Make cores downto..N right-orthonormal (downto >= 2).
TtCores tt_right_orthonormalize(TtCores t, Index downto);

/// Kronecker-rank-R factorization of an even-order paired tensor:
/// A = sum_r A^(1)_{r::} o ... o A^(N)_{r::} with components R x Jn x In.
struct GenCpFactors {
    std::vector<DenseTensor> components;

    Index order() const { return static_cast<Index>(components.size()); }
    Index kronecker_rank() const;
    PairedShape pshape() const;
    /// Slice A^(n)_{r::} as a Jn x In matrix (1-based n and r).
    Eigen::MatrixXd slice(Index n, Index r) const;
};

/// Generalized TT cores A^(n) of shape R_{n-1} x Jn x In x Rn.
struct GenTtCores {
    std::vector<DenseTensor> cores;
    std::vector<Index> ranks;

    Index order() const { return static_cast<Index>(cores.size()); }
    PairedShape pshape() const;
};

/// Generalized CPD: CP-ALS on the pairwise reshape (J1 I1, ..., JN IN), with
/// weights folded into the slices as lambda^(1/N).
GenCpFactors generalized_cpd(const EvenPairedTensor& a, Index r, const CpOptions& opts = {});

GenTtCores generalized_ttd(const EvenPairedTensor& a, double eps);
GenTtCores generalized_ttd_exact(const EvenPairedTensor& a, double tol = linalg::kRankTol);

EvenPairedTensor gen_cpd_to_full(const GenCpFactors& f);
EvenPairedTensor gen_ttd_to_full(const GenTtCores& t);

/// Einstein product in Kronecker-rank format: slices multiply pairwise and
/// ranks multiply (T = R * S, not reduced).
GenCpFactors einstein_compose_cpd(const GenCpFactors& a, const GenCpFactors& b);

/// Einstein product in generalized TT format: TT-ranks multiply corewise.
GenTtCores einstein_compose_ttd(const GenTtCores& a, const GenTtCores& b);

/// Generalized TT cores of the U-transpose (row/column legs swapped).
GenTtCores gen_tt_transpose(const GenTtCores& a);

/// TT rounding to bond rank caps (caps[k] bounds rank R_{k+1}, k = 0..N-2):
/// left-orthonormalize, then truncate right-to-left by SVD. Nested caps give
/// nested approximations, so the truncation error grows monotonically.
TtCores tt_round(TtCores t, const std::vector<Index>& bond_caps);
GenTtCores gen_tt_round(const GenTtCores& t, const std::vector<Index>& bond_caps);

/// TTD of the grouped transpose A~ (all row modes before all column modes),
/// computed by reconstruct-and-redecompose. ranks[N] of the result is the
/// unfolding rank in exact mode.
TtCores ttd_permuted(const EvenPairedTensor& a, double eps);
TtCores ttd_permuted_exact(const EvenPairedTensor& a, double tol = linalg::kRankTol);
TtCores ttd_permuted_exact(const GenTtCores& a, double tol = linalg::kRankTol);

/// Unfolding rank read off the N-th optimal TT-rank of A~.
Index unfolding_rank_via_ttd(const EvenPairedTensor& a, double tol = linalg::kRankTol);

/// Columnwise Kronecker product of matrices with equal column counts.
Eigen::MatrixXd khatri_rao(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Largest k such that every k-column subset is numerically independent.
/// Exhaustive over subsets; refuses matrices with more than max_cols columns.
Index k_rank(const Eigen::MatrixXd& a, double tol = linalg::kRankTol, Index max_cols = 20);

/// k-rank certificate for the unfolding rank of an even-order paired tensor
/// in CPD format: sufficient only, so the negative outcome is inconclusive.
struct RankCertificate {
    bool certified = false;
    Index rank = 0;
    std::vector<Index> odd_k_ranks;
    std::vector<Index> even_k_ranks;
    std::string note;
};

/// cp holds the 2N factor matrices of the interleaved order-2N tensor.
RankCertificate cpd_rank_certificate(const CpFactors& cp);

/// Requires every slice to be numerically rank one so the order-2N factor
/// matrices can be recovered; otherwise inconclusive.
RankCertificate cpd_rank_certificate(const GenCpFactors& f, double split_tol = 1e-10);

/// Smallest R whose CP fit reaches 1 - 1e-8, found by doubling then
/// bisection on the pairwise reshape of a.
Index estimate_kronecker_rank(const EvenPairedTensor& a, const CpOptions& opts = {},
                              double fit_goal = 1.0 - 1e-8);

} // namespace mlti
