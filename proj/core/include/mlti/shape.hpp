#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "mlti/error.hpp"

namespace mlti {

using Index = std::int64_t;

/// 1-based multi-index (j1,...,jN).
using IndexTuple = std::vector<Index>;

/// Extents (J1,...,JN) of a dense tensor. Order 0 (a scalar) is legal and has
/// element count 1; every extent must be >= 1.
class Shape {
public:
    Shape() = default;
    Shape(std::initializer_list<Index> dims) : Shape(std::vector<Index>(dims)) {}
    explicit Shape(std::vector<Index> dims);

    Index order() const { return static_cast<Index>(dims_.size()); }
    /// Extent of 1-based mode n.
    Index extent(Index mode) const;
    const std::vector<Index>& dims() const { return dims_; }
    /// Product of all extents.
    Index count() const { return count_; }

    bool operator==(const Shape&) const = default;
    std::string str() const;

private:
    std::vector<Index> dims_;
    Index count_ = 1;
};

/// Linear position (1-based) of a multi-index, first index fastest:
/// ivec(j, J) = j1 + sum_{k>=2} (jk - 1) * prod_{l<k} Jl.
Index ivec(const IndexTuple& idx, const Shape& shape);

/// Inverse of ivec: the multi-index at linear position p (1 <= p <= count).
IndexTuple ivec_inverse(Index p, const Shape& shape);

/// Per-mode strides of the ivec layout (stride of mode 1 is 1).
std::vector<Index> ivec_strides(const Shape& shape);

/// Bijection S on {1,...,N} stored as its image list (S(1),...,S(N)).
class Permutation {
public:
    explicit Permutation(std::vector<Index> image);
    Permutation(std::initializer_list<Index> image)
        : Permutation(std::vector<Index>(image)) {}

    static Permutation identity(Index n);

    Index order() const { return static_cast<Index>(image_.size()); }
    /// S(k) for 1-based k.
    Index image(Index k) const;
    const std::vector<Index>& images() const { return image_; }
    Permutation inverse() const;

    bool operator==(const Permutation&) const = default;

private:
    std::vector<Index> image_;
};

} // namespace mlti
