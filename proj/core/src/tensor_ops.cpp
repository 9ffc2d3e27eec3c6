#include "mlti/tensor_ops.hpp"

#include <algorithm>

#include "mlti/linalg.hpp"

namespace mlti {

namespace {

// Scatter copy: input mode k (0-based) advances the destination offset by
// out_stride[k]. The induced map must be a bijection onto [0, out_size).
std::vector<double> relabel_scatter(const DenseTensor& in, const std::vector<Index>& out_stride,
                                    Index out_size) {
    std::vector<double> out(static_cast<std::size_t>(out_size));
    const auto& dims = in.shape().dims();
    const std::size_t n = dims.size();
    std::vector<Index> counter(n, 0);
    Index off = 0;
    for (Index flat = 0; flat < in.size(); ++flat) {
        out[static_cast<std::size_t>(off)] = in[flat];
        for (std::size_t k = 0; k < n; ++k) {
            if (++counter[k] < dims[k]) {
                off += out_stride[k];
                break;
            }
            counter[k] = 0;
            off -= out_stride[k] * (dims[k] - 1);
        }
    }
    return out;
}

// Gather copy: output mode k advances the source offset by in_stride[k].
std::vector<double> relabel_gather(std::span<const double> in, const Shape& out_shape,
                                   const std::vector<Index>& in_stride) {
    std::vector<double> out(static_cast<std::size_t>(out_shape.count()));
    const auto& dims = out_shape.dims();
    const std::size_t n = dims.size();
    std::vector<Index> counter(n, 0);
    Index off = 0;
    for (std::size_t flat = 0; flat < out.size(); ++flat) {
        out[flat] = in[static_cast<std::size_t>(off)];
        for (std::size_t k = 0; k < n; ++k) {
            if (++counter[k] < dims[k]) {
                off += in_stride[k];
                break;
            }
            counter[k] = 0;
            off -= in_stride[k] * (dims[k] - 1);
        }
    }
    return out;
}

} // namespace

DenseTensor s_transpose(const DenseTensor& x, const Permutation& s) {
    if (s.order() != x.order())
        throw DomainError("s_transpose: permutation order " + std::to_string(s.order()) +
                          " does not match tensor order " + std::to_string(x.order()));
    const Index n = x.order();
    std::vector<Index> out_dims(static_cast<std::size_t>(n));
    for (Index k = 1; k <= n; ++k)
        out_dims[static_cast<std::size_t>(k - 1)] = x.shape().extent(s.image(k));
    Shape out_shape{std::move(out_dims)};
    const auto out_strides = ivec_strides(out_shape);
    const Permutation sinv = s.inverse();
    // Input mode l lands at output position S^{-1}(l).
    std::vector<Index> stride_per_in(static_cast<std::size_t>(n));
    for (Index l = 1; l <= n; ++l)
        stride_per_in[static_cast<std::size_t>(l - 1)] =
            out_strides[static_cast<std::size_t>(sinv.image(l) - 1)];
    return DenseTensor(out_shape, relabel_scatter(x, stride_per_in, out_shape.count()));
}

DenseTensor rc_unfold(const DenseTensor& x, const std::vector<Index>& row_modes,
                      const std::vector<Index>& col_modes) {
    const Index n = x.order();
    if (row_modes.empty() || col_modes.empty())
        throw DomainError("rc_unfold: row and column mode groups must both be nonempty");
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    auto check = [&](const std::vector<Index>& modes) {
        for (Index m : modes) {
            if (m < 1 || m > n || seen[static_cast<std::size_t>(m - 1)])
                throw DomainError("rc_unfold: row/col modes are not a partition of {1,...,N}");
            seen[static_cast<std::size_t>(m - 1)] = true;
        }
    };
    check(row_modes);
    check(col_modes);
    if (static_cast<Index>(row_modes.size() + col_modes.size()) != n)
        throw DomainError("rc_unfold: row/col modes are not a partition of {1,...,N}");

    std::vector<Index> stride_per_in(static_cast<std::size_t>(n), 0);
    Index p = 1;
    for (Index m : row_modes) {
        stride_per_in[static_cast<std::size_t>(m - 1)] = p;
        p *= x.shape().extent(m);
    }
    Index q = 1;
    for (Index m : col_modes) {
        stride_per_in[static_cast<std::size_t>(m - 1)] = p * q;
        q *= x.shape().extent(m);
    }
    Shape out_shape{p, q};
    return DenseTensor(out_shape, relabel_scatter(x, stride_per_in, out_shape.count()));
}

DenseTensor n_mode_matricize(const DenseTensor& x, Index n) {
    if (n < 1 || n > x.order()) throw DomainError("n_mode_matricize: bad mode " + std::to_string(n));
    if (x.order() == 1) return reshape(x, Shape{x.shape().extent(1), 1});
    std::vector<Index> cols;
    for (Index m = 1; m <= x.order(); ++m)
        if (m != n) cols.push_back(m);
    return rc_unfold(x, {n}, cols);
}

DenseTensor n_mode_product(const DenseTensor& x, const Eigen::MatrixXd& a, Index n) {
    if (n < 1 || n > x.order()) throw DomainError("n_mode_product: bad mode " + std::to_string(n));
    if (a.cols() != x.shape().extent(n))
        throw DomainError("n_mode_product: matrix has " + std::to_string(a.cols()) +
                          " columns, mode extent is " + std::to_string(x.shape().extent(n)));
    const DenseTensor xn = n_mode_matricize(x, n);
    const Eigen::MatrixXd res = a * linalg::as_matrix(xn);

    std::vector<Index> out_dims = x.shape().dims();
    out_dims[static_cast<std::size_t>(n - 1)] = a.rows();
    Shape out_shape{std::move(out_dims)};

    // Gather from the (rows x rest) product back into tensor layout.
    std::vector<Index> in_stride(static_cast<std::size_t>(x.order()), 0);
    in_stride[static_cast<std::size_t>(n - 1)] = 1;
    Index s = a.rows();
    for (Index m = 1; m <= x.order(); ++m) {
        if (m == n) continue;
        in_stride[static_cast<std::size_t>(m - 1)] = s;
        s *= x.shape().extent(m);
    }
    std::span<const double> flat(res.data(), static_cast<std::size_t>(res.size()));
    return DenseTensor(out_shape, relabel_gather(flat, out_shape, in_stride));
}

DenseTensor tucker_product(const DenseTensor& x, const std::vector<Eigen::MatrixXd>& mats) {
    if (static_cast<Index>(mats.size()) != x.order())
        throw DomainError("tucker_product: expected " + std::to_string(x.order()) +
                          " matrices, got " + std::to_string(mats.size()));
    DenseTensor out = x;
    for (Index n = 1; n <= x.order(); ++n)
        out = n_mode_product(out, mats[static_cast<std::size_t>(n - 1)], n);
    return out;
}

} // namespace mlti
