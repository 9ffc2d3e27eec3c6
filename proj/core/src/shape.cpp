#include "mlti/shape.hpp"

#include <limits>
#include <sstream>

namespace mlti {

Shape::Shape(std::vector<Index> dims) : dims_(std::move(dims)) {
    count_ = 1;
    for (Index d : dims_) {
        if (d < 1) throw DomainError("Shape: every extent must be >= 1, got " + std::to_string(d));
        if (count_ > std::numeric_limits<Index>::max() / d)
            throw DomainError("Shape: element count overflows the index range");
        count_ *= d;
    }
}

Index Shape::extent(Index mode) const {
    if (mode < 1 || mode > order())
        throw DomainError("Shape: mode " + std::to_string(mode) + " out of range for order " +
                          std::to_string(order()));
    return dims_[static_cast<std::size_t>(mode - 1)];
}

std::string Shape::str() const {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < dims_.size(); ++i) {
        if (i) os << 'x';
        os << dims_[i];
    }
    os << ')';
    return os.str();
}

Index ivec(const IndexTuple& idx, const Shape& shape) {
    if (static_cast<Index>(idx.size()) != shape.order())
        throw DomainError("ivec: index order " + std::to_string(idx.size()) +
                          " does not match shape order " + std::to_string(shape.order()));
    Index p = 1;
    Index stride = 1;
    for (Index k = 0; k < shape.order(); ++k) {
        const Index jk = idx[static_cast<std::size_t>(k)];
        const Index ext = shape.dims()[static_cast<std::size_t>(k)];
        if (jk < 1 || jk > ext)
            throw DomainError("ivec: index " + std::to_string(jk) + " out of range [1," +
                              std::to_string(ext) + "] in mode " + std::to_string(k + 1));
        p += (jk - 1) * stride;
        stride *= ext;
    }
    return p;
}

IndexTuple ivec_inverse(Index p, const Shape& shape) {
    if (p < 1 || p > shape.count())
        throw DomainError("ivec_inverse: position " + std::to_string(p) + " out of range [1," +
                          std::to_string(shape.count()) + "]");
    IndexTuple idx(static_cast<std::size_t>(shape.order()));
    Index rem = p - 1;
    for (Index k = 0; k < shape.order(); ++k) {
        const Index ext = shape.dims()[static_cast<std::size_t>(k)];
        idx[static_cast<std::size_t>(k)] = rem % ext + 1;
        rem /= ext;
    }
    return idx;
}

std::vector<Index> ivec_strides(const Shape& shape) {
    std::vector<Index> strides(static_cast<std::size_t>(shape.order()));
    Index s = 1;
    for (Index k = 0; k < shape.order(); ++k) {
        strides[static_cast<std::size_t>(k)] = s;
        s *= shape.dims()[static_cast<std::size_t>(k)];
    }
    return strides;
}

Permutation::Permutation(std::vector<Index> image) : image_(std::move(image)) {
    std::vector<bool> seen(image_.size(), false);
    for (Index v : image_) {
        if (v < 1 || v > order() || seen[static_cast<std::size_t>(v - 1)])
            throw DomainError("Permutation: image is not a bijection on {1,...,N}");
        seen[static_cast<std::size_t>(v - 1)] = true;
    }
}

Permutation Permutation::identity(Index n) {
    std::vector<Index> im(static_cast<std::size_t>(n));
    for (Index k = 0; k < n; ++k) im[static_cast<std::size_t>(k)] = k + 1;
    return Permutation(std::move(im));
}

Index Permutation::image(Index k) const {
    if (k < 1 || k > order()) throw DomainError("Permutation: argument out of range");
    return image_[static_cast<std::size_t>(k - 1)];
}

Permutation Permutation::inverse() const {
    std::vector<Index> inv(image_.size());
    for (Index k = 1; k <= order(); ++k) inv[static_cast<std::size_t>(image(k) - 1)] = k;
    return Permutation(std::move(inv));
}

} // namespace mlti
