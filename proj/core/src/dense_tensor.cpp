#include "mlti/dense_tensor.hpp"

#include <cmath>

namespace mlti {

DenseTensor::DenseTensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (static_cast<Index>(data_.size()) != shape_.count())
        throw DomainError("DenseTensor: data length " + std::to_string(data_.size()) +
                          " does not match element count " + std::to_string(shape_.count()));
}

DenseTensor DenseTensor::scalar(double v) {
    DenseTensor t;
    t.data_[0] = v;
    return t;
}

bool DenseTensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

DenseTensor& DenseTensor::operator+=(const DenseTensor& rhs) {
    if (shape_ != rhs.shape_) throw DomainError("tensor +: shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += rhs.data_[i];
    return *this;
}

DenseTensor& DenseTensor::operator-=(const DenseTensor& rhs) {
    if (shape_ != rhs.shape_) throw DomainError("tensor -: shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= rhs.data_[i];
    return *this;
}

DenseTensor& DenseTensor::operator*=(double c) {
    for (double& v : data_) v *= c;
    return *this;
}

DenseTensor operator+(DenseTensor lhs, const DenseTensor& rhs) { return lhs += rhs; }
DenseTensor operator-(DenseTensor lhs, const DenseTensor& rhs) { return lhs -= rhs; }
DenseTensor operator*(double c, DenseTensor t) { return t *= c; }

DenseTensor outer(const DenseTensor& x, const DenseTensor& y) {
    std::vector<Index> dims = x.shape().dims();
    dims.insert(dims.end(), y.shape().dims().begin(), y.shape().dims().end());
    DenseTensor out{Shape(std::move(dims))};
    const Index nx = x.size();
    const Index ny = y.size();
    for (Index q = 0; q < ny; ++q) {
        const double yq = y[q];
        double* dst = out.data().data() + q * nx;
        for (Index p = 0; p < nx; ++p) dst[p] = x[p] * yq;
    }
    return out;
}

double inner(const DenseTensor& x, const DenseTensor& y) {
    if (x.shape() != y.shape()) throw DomainError("inner: shape mismatch");
    double acc = 0.0;
    for (Index i = 0; i < x.size(); ++i) acc += x[i] * y[i];
    return acc;
}

double frobenius_norm(const DenseTensor& x) {
    double acc = 0.0;
    for (Index i = 0; i < x.size(); ++i) acc += x[i] * x[i];
    return std::sqrt(acc);
}

DenseTensor reshape(const DenseTensor& x, const Shape& new_shape) {
    if (new_shape.count() != x.size())
        throw DomainError("reshape: element count mismatch, " + x.shape().str() + " -> " +
                          new_shape.str());
    return DenseTensor(new_shape, std::vector<double>(x.data().begin(), x.data().end()));
}

} // namespace mlti
