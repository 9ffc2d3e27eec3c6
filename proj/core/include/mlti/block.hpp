#pragma once

#include "mlti/paired.hpp"

namespace mlti {

/// Factorization (K1,...,KN) of a block count K = K1 K2 ... KN.
struct BlockFactorization {
    std::vector<Index> factors;

    Index count() const {
        Index k = 1;
        for (Index f : factors) k *= f;
        return k;
    }
};

/// n-mode row block tensor |A B|_n: the n-th column extent is doubled, with
/// A occupying the leading half and B the trailing half.
EvenPairedTensor n_mode_row_block(const EvenPairedTensor& a, const EvenPairedTensor& b, Index n);

/// n-mode column block tensor |A; B|_n: the n-th row extent is doubled.
EvenPairedTensor n_mode_col_block(const EvenPairedTensor& a, const EvenPairedTensor& b, Index n);

/// K-ary concatenation of same-shaped blocks along mode n's column index;
/// block k occupies positions (k-1)*In+1 .. k*In.
EvenPairedTensor n_mode_row_concat(const std::vector<EvenPairedTensor>& blocks, Index n);
EvenPairedTensor n_mode_col_concat(const std::vector<EvenPairedTensor>& blocks, Index n);

/// Generalized mode row block tensor of K = prod(f) blocks: staged 1-mode,
/// 2-mode, ..., N-mode concatenation over consecutive groups of f.factors[n-1]
/// blocks. The result has column extents In * Kn.
EvenPairedTensor mode_row_block(const std::vector<EvenPairedTensor>& blocks,
                                const BlockFactorization& f);

/// Dual of mode_row_block acting on row extents (Jn * Kn).
EvenPairedTensor mode_col_block(const std::vector<EvenPairedTensor>& blocks,
                                const BlockFactorization& f);

/// Recover block (k1,...,kN) from a mode row block tensor assembled with f
/// from blocks of the given shape.
EvenPairedTensor extract_row_block(const EvenPairedTensor& y, const PairedShape& block_shape,
                                   const BlockFactorization& f, const IndexTuple& k);
EvenPairedTensor extract_col_block(const EvenPairedTensor& y, const PairedShape& block_shape,
                                   const BlockFactorization& f, const IndexTuple& k);

/// Test utility: verifies P * |A B|_n = |P*A P*B|_n and the contraction
/// identity |A B|_n * |C; D|_n = A*C + B*D to the given tolerance.
bool block_distribute_check(const EvenPairedTensor& p, const EvenPairedTensor& a,
                            const EvenPairedTensor& b, const EvenPairedTensor& c,
                            const EvenPairedTensor& d, Index n, double tol = 1e-12);

/// Convenience overload with C = A^T and D = B^T.
bool block_distribute_check(const EvenPairedTensor& p, const EvenPairedTensor& a,
                            const EvenPairedTensor& b, Index n, double tol = 1e-12);

} // namespace mlti
