#pragma once

#include <span>
#include <vector>

#include "mlti/shape.hpp"

namespace mlti {

/// Dense real tensor of arbitrary order. Entries are stored flat in ivec
/// order (first index fastest), so an order-2 tensor is a column-major matrix.
class DenseTensor {
public:
    /// Order-0 scalar zero.
    DenseTensor() : data_(1, 0.0) {}
    /// Zero tensor of the given shape.
    explicit DenseTensor(Shape shape)
        : shape_(std::move(shape)), data_(static_cast<std::size_t>(shape_.count()), 0.0) {}
    DenseTensor(Shape shape, std::vector<double> data);

    static DenseTensor scalar(double v);

    const Shape& shape() const { return shape_; }
    Index order() const { return shape_.order(); }
    Index size() const { return shape_.count(); }

    std::span<const double> data() const { return data_; }
    std::span<double> data() { return data_; }

    /// 0-based flat access in ivec order.
    double operator[](Index flat) const { return data_[static_cast<std::size_t>(flat)]; }
    double& operator[](Index flat) { return data_[static_cast<std::size_t>(flat)]; }

    /// 1-based multi-index access.
    double at(const IndexTuple& idx) const { return data_[static_cast<std::size_t>(ivec(idx, shape_) - 1)]; }
    double& at(const IndexTuple& idx) { return data_[static_cast<std::size_t>(ivec(idx, shape_) - 1)]; }

    bool all_finite() const;

    DenseTensor& operator+=(const DenseTensor& rhs);
    DenseTensor& operator-=(const DenseTensor& rhs);
    DenseTensor& operator*=(double c);

private:
    Shape shape_;
    std::vector<double> data_;
};

DenseTensor operator+(DenseTensor lhs, const DenseTensor& rhs);
DenseTensor operator-(DenseTensor lhs, const DenseTensor& rhs);
DenseTensor operator*(double c, DenseTensor t);

/// Outer product: order Nx + Ny, (x o y)_{j,i} = x_j * y_i.
DenseTensor outer(const DenseTensor& x, const DenseTensor& y);

/// Inner product of two same-shaped tensors.
double inner(const DenseTensor& x, const DenseTensor& y);

/// Frobenius norm, sqrt(inner(x, x)).
double frobenius_norm(const DenseTensor& x);

/// Relabel to a new shape with the same element count; flat data is unchanged.
DenseTensor reshape(const DenseTensor& x, const Shape& new_shape);

} // namespace mlti
