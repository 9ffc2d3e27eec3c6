#pragma once

#include <utility>
#include <vector>

#include "mlti/dense_tensor.hpp"

namespace mlti {

/// Paired extents ((J1,I1),...,(JN,IN)) of an even-order paired tensor.
/// The row shape is (J1,...,JN) and the column shape (I1,...,IN).
class PairedShape {
public:
    explicit PairedShape(std::vector<std::pair<Index, Index>> pairs);
    PairedShape(std::initializer_list<std::pair<Index, Index>> pairs)
        : PairedShape(std::vector<std::pair<Index, Index>>(pairs)) {}

    /// Square paired shape ((J1,J1),...,(JN,JN)).
    static PairedShape square(const Shape& j);
    /// Pair the modes of a row shape and a column shape of equal order.
    static PairedShape from_row_col(const Shape& rows, const Shape& cols);

    Index order() const { return static_cast<Index>(pairs_.size()); }
    std::pair<Index, Index> pair(Index n) const;
    const std::vector<std::pair<Index, Index>>& pairs() const { return pairs_; }

    Shape row_shape() const;
    Shape col_shape() const;
    /// Interleaved dense shape (J1,I1,...,JN,IN).
    Shape interleaved() const;

    bool is_square() const;
    PairedShape transposed() const;

    bool operator==(const PairedShape&) const = default;
    std::string str() const;

private:
    std::vector<std::pair<Index, Index>> pairs_;
};

/// Order-2N tensor with pairwise index notation A_{j1 i1 ... jN iN}; the
/// multilinear counterpart of a matrix. Stores the interleaved dense tensor.
class EvenPairedTensor {
public:
    /// Zero tensor of the given paired shape.
    explicit EvenPairedTensor(PairedShape pshape);
    EvenPairedTensor(PairedShape pshape, DenseTensor data);
    /// Interpret an order-2N dense tensor as paired with interleaved extents.
    static EvenPairedTensor from_interleaved(DenseTensor data);

    const PairedShape& pshape() const { return pshape_; }
    const DenseTensor& tensor() const { return data_; }
    DenseTensor& tensor() { return data_; }
    Index order() const { return pshape_.order(); }
    bool is_square() const { return pshape_.is_square(); }

    /// 1-based paired access A_{j1 i1 ... jN iN} given row and column tuples.
    double at(const IndexTuple& j, const IndexTuple& i) const;
    double& at(const IndexTuple& j, const IndexTuple& i);

private:
    PairedShape pshape_;
    DenseTensor data_;
};

} // namespace mlti
