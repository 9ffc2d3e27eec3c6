#include "mlti/block.hpp"

#include <cmath>

#include "mlti/einstein.hpp"

namespace mlti {

namespace {

// Copy `block` into `out` at a base offset, mode for mode; `out_stride[m]` is
// the stride of interleaved mode m of the output.
void place(const DenseTensor& block, DenseTensor& out, const std::vector<Index>& out_stride,
           Index base) {
    const auto& dims = block.shape().dims();
    const std::size_t m = dims.size();
    std::vector<Index> c(m, 0);
    Index off = base;
    for (Index flat = 0; flat < block.size(); ++flat) {
        out[off] = block[flat];
        for (std::size_t k = 0; k < m; ++k) {
            if (++c[k] < dims[k]) {
                off += out_stride[k];
                break;
            }
            c[k] = 0;
            off -= out_stride[k] * (dims[k] - 1);
        }
    }
}

EvenPairedTensor concat(const std::vector<EvenPairedTensor>& blocks, Index n, bool row_version) {
    if (blocks.empty()) throw DomainError("block concat: no blocks");
    const PairedShape bs = blocks.front().pshape();
    for (const auto& b : blocks)
        if (b.pshape() != bs) throw DomainError("block concat: blocks differ in paired shape");
    if (n < 1 || n > bs.order()) throw DomainError("block concat: bad mode " + std::to_string(n));

    const Index k = static_cast<Index>(blocks.size());
    std::vector<std::pair<Index, Index>> pairs = bs.pairs();
    auto& [jn, in] = pairs[static_cast<std::size_t>(n - 1)];
    const Index block_extent = row_version ? in : jn;
    (row_version ? in : jn) *= k;
    const PairedShape out_ps{std::move(pairs)};

    EvenPairedTensor out(out_ps);
    const auto out_strides = ivec_strides(out_ps.interleaved());
    const Index mode = row_version ? 2 * n - 1 : 2 * n - 2; // 0-based interleaved mode
    const Index base_step = out_strides[static_cast<std::size_t>(mode)] * block_extent;
    for (Index b = 0; b < k; ++b)
        place(blocks[static_cast<std::size_t>(b)].tensor(), out.tensor(), out_strides,
              b * base_step);
    return out;
}

EvenPairedTensor staged_block(const std::vector<EvenPairedTensor>& blocks,
                              const BlockFactorization& f, bool row_version) {
    if (f.factors.empty()) throw DomainError("mode block: empty factorization");
    if (blocks.empty()) throw DomainError("mode block: no blocks");
    if (f.count() != static_cast<Index>(blocks.size()))
        throw DomainError("mode block: factorization product " + std::to_string(f.count()) +
                          " does not match block count " + std::to_string(blocks.size()));
    if (static_cast<Index>(f.factors.size()) != blocks.front().pshape().order())
        throw DomainError("mode block: factorization order does not match tensor order");

    std::vector<EvenPairedTensor> stage = blocks;
    for (Index n = 1; n <= static_cast<Index>(f.factors.size()); ++n) {
        const Index kn = f.factors[static_cast<std::size_t>(n - 1)];
        std::vector<EvenPairedTensor> next;
        next.reserve(stage.size() / static_cast<std::size_t>(kn));
        for (std::size_t g = 0; g + static_cast<std::size_t>(kn) <= stage.size();
             g += static_cast<std::size_t>(kn)) {
            std::vector<EvenPairedTensor> group(stage.begin() + static_cast<std::ptrdiff_t>(g),
                                                stage.begin() +
                                                    static_cast<std::ptrdiff_t>(g + kn));
            next.push_back(concat(group, n, row_version));
        }
        stage = std::move(next);
    }
    return stage.front();
}

EvenPairedTensor extract(const EvenPairedTensor& y, const PairedShape& block_shape,
                         const BlockFactorization& f, const IndexTuple& k, bool row_version) {
    const Index n = block_shape.order();
    if (static_cast<Index>(k.size()) != n || static_cast<Index>(f.factors.size()) != n)
        throw DomainError("extract block: order mismatch");
    const auto y_strides = ivec_strides(y.tensor().shape());
    Index base = 0;
    for (Index m = 1; m <= n; ++m) {
        const Index km = k[static_cast<std::size_t>(m - 1)];
        if (km < 1 || km > f.factors[static_cast<std::size_t>(m - 1)])
            throw DomainError("extract block: block index out of range");
        const Index extent = row_version ? block_shape.pair(m).second : block_shape.pair(m).first;
        const Index mode = row_version ? 2 * m - 1 : 2 * m - 2;
        base += (km - 1) * extent * y_strides[static_cast<std::size_t>(mode)];
    }
    // Gather the block entry by entry.
    EvenPairedTensor out(block_shape);
    const auto& dims = out.tensor().shape().dims();
    const std::size_t m = dims.size();
    std::vector<Index> c(m, 0);
    Index off = base;
    for (Index flat = 0; flat < out.tensor().size(); ++flat) {
        out.tensor()[flat] = y.tensor()[off];
        for (std::size_t q = 0; q < m; ++q) {
            if (++c[q] < dims[q]) {
                off += y_strides[q];
                break;
            }
            c[q] = 0;
            off -= y_strides[q] * (dims[q] - 1);
        }
    }
    return out;
}

} // namespace

EvenPairedTensor n_mode_row_block(const EvenPairedTensor& a, const EvenPairedTensor& b, Index n) {
    return concat({a, b}, n, true);
}

EvenPairedTensor n_mode_col_block(const EvenPairedTensor& a, const EvenPairedTensor& b, Index n) {
    return concat({a, b}, n, false);
}

EvenPairedTensor n_mode_row_concat(const std::vector<EvenPairedTensor>& blocks, Index n) {
    return concat(blocks, n, true);
}

EvenPairedTensor n_mode_col_concat(const std::vector<EvenPairedTensor>& blocks, Index n) {
    return concat(blocks, n, false);
}

EvenPairedTensor mode_row_block(const std::vector<EvenPairedTensor>& blocks,
                                const BlockFactorization& f) {
    return staged_block(blocks, f, true);
}

EvenPairedTensor mode_col_block(const std::vector<EvenPairedTensor>& blocks,
                                const BlockFactorization& f) {
    return staged_block(blocks, f, false);
}

EvenPairedTensor extract_row_block(const EvenPairedTensor& y, const PairedShape& block_shape,
                                   const BlockFactorization& f, const IndexTuple& k) {
    return extract(y, block_shape, f, k, true);
}

EvenPairedTensor extract_col_block(const EvenPairedTensor& y, const PairedShape& block_shape,
                                   const BlockFactorization& f, const IndexTuple& k) {
    return extract(y, block_shape, f, k, false);
}

bool block_distribute_check(const EvenPairedTensor& p, const EvenPairedTensor& a,
                            const EvenPairedTensor& b, const EvenPairedTensor& c,
                            const EvenPairedTensor& d, Index n, double tol) {
    const EvenPairedTensor lhs1 = einstein_compose(p, n_mode_row_block(a, b, n));
    const EvenPairedTensor rhs1 =
        n_mode_row_block(einstein_compose(p, a), einstein_compose(p, b), n);
    const double scale1 = std::max(1.0, frobenius_norm(rhs1.tensor()));
    if (frobenius_norm(lhs1.tensor() - rhs1.tensor()) > tol * scale1) return false;

    const EvenPairedTensor lhs2 =
        einstein_compose(n_mode_row_block(a, b, n), n_mode_col_block(c, d, n));
    const EvenPairedTensor rhs2 =
        EvenPairedTensor(lhs2.pshape(), einstein_compose(a, c).tensor() +
                                            einstein_compose(b, d).tensor());
    const double scale2 = std::max(1.0, frobenius_norm(rhs2.tensor()));
    return frobenius_norm(lhs2.tensor() - rhs2.tensor()) <= tol * scale2;
}

bool block_distribute_check(const EvenPairedTensor& p, const EvenPairedTensor& a,
                            const EvenPairedTensor& b, Index n, double tol) {
    return block_distribute_check(p, a, b, u_transpose(a), u_transpose(b), n, tol);
}

} // namespace mlti
