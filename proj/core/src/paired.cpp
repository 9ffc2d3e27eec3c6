#include "mlti/paired.hpp"

#include <sstream>

namespace mlti {

PairedShape::PairedShape(std::vector<std::pair<Index, Index>> pairs) : pairs_(std::move(pairs)) {
    if (pairs_.empty()) throw DomainError("PairedShape: order must be >= 1");
    for (const auto& [j, i] : pairs_)
        if (j < 1 || i < 1) throw DomainError("PairedShape: extents must be >= 1");
}

PairedShape PairedShape::square(const Shape& j) {
    std::vector<std::pair<Index, Index>> pairs;
    pairs.reserve(static_cast<std::size_t>(j.order()));
    for (Index n = 1; n <= j.order(); ++n) pairs.emplace_back(j.extent(n), j.extent(n));
    return PairedShape(std::move(pairs));
}

PairedShape PairedShape::from_row_col(const Shape& rows, const Shape& cols) {
    if (rows.order() != cols.order())
        throw DomainError("PairedShape: row and column shapes must have the same order");
    std::vector<std::pair<Index, Index>> pairs;
    for (Index n = 1; n <= rows.order(); ++n) pairs.emplace_back(rows.extent(n), cols.extent(n));
    return PairedShape(std::move(pairs));
}

std::pair<Index, Index> PairedShape::pair(Index n) const {
    if (n < 1 || n > order()) throw DomainError("PairedShape: pair index out of range");
    return pairs_[static_cast<std::size_t>(n - 1)];
}

Shape PairedShape::row_shape() const {
    std::vector<Index> dims;
    dims.reserve(pairs_.size());
    for (const auto& [j, i] : pairs_) dims.push_back(j);
    return Shape(std::move(dims));
}

Shape PairedShape::col_shape() const {
    std::vector<Index> dims;
    dims.reserve(pairs_.size());
    for (const auto& [j, i] : pairs_) dims.push_back(i);
    return Shape(std::move(dims));
}

Shape PairedShape::interleaved() const {
    std::vector<Index> dims;
    dims.reserve(2 * pairs_.size());
    for (const auto& [j, i] : pairs_) {
        dims.push_back(j);
        dims.push_back(i);
    }
    return Shape(std::move(dims));
}

bool PairedShape::is_square() const {
    for (const auto& [j, i] : pairs_)
        if (j != i) return false;
    return true;
}

PairedShape PairedShape::transposed() const {
    std::vector<std::pair<Index, Index>> pairs;
    pairs.reserve(pairs_.size());
    for (const auto& [j, i] : pairs_) pairs.emplace_back(i, j);
    return PairedShape(std::move(pairs));
}

std::string PairedShape::str() const {
    std::ostringstream os;
    os << '(';
    for (std::size_t n = 0; n < pairs_.size(); ++n) {
        if (n) os << ", ";
        os << pairs_[n].first << 'x' << pairs_[n].second;
    }
    os << ')';
    return os.str();
}

EvenPairedTensor::EvenPairedTensor(PairedShape pshape)
    : pshape_(std::move(pshape)), data_(pshape_.interleaved()) {}

EvenPairedTensor::EvenPairedTensor(PairedShape pshape, DenseTensor data)
    : pshape_(std::move(pshape)), data_(std::move(data)) {
    if (data_.shape() != pshape_.interleaved())
        throw DomainError("EvenPairedTensor: dense shape " + data_.shape().str() +
                          " does not match paired shape " + pshape_.str());
}

EvenPairedTensor EvenPairedTensor::from_interleaved(DenseTensor data) {
    if (data.order() < 2 || data.order() % 2 != 0)
        throw DomainError("EvenPairedTensor: interleaved tensor must have even order >= 2");
    std::vector<std::pair<Index, Index>> pairs;
    for (Index n = 1; n <= data.order(); n += 2)
        pairs.emplace_back(data.shape().extent(n), data.shape().extent(n + 1));
    PairedShape ps(std::move(pairs));
    return EvenPairedTensor(std::move(ps), std::move(data));
}

namespace {
IndexTuple interleave(const IndexTuple& j, const IndexTuple& i) {
    IndexTuple idx;
    idx.reserve(2 * j.size());
    for (std::size_t n = 0; n < j.size(); ++n) {
        idx.push_back(j[n]);
        idx.push_back(i[n]);
    }
    return idx;
}
} // namespace

double EvenPairedTensor::at(const IndexTuple& j, const IndexTuple& i) const {
    if (j.size() != i.size() || static_cast<Index>(j.size()) != order())
        throw DomainError("EvenPairedTensor::at: index tuple order mismatch");
    return data_.at(interleave(j, i));
}

double& EvenPairedTensor::at(const IndexTuple& j, const IndexTuple& i) {
    if (j.size() != i.size() || static_cast<Index>(j.size()) != order())
        throw DomainError("EvenPairedTensor::at: index tuple order mismatch");
    return data_.at(interleave(j, i));
}

} // namespace mlti
