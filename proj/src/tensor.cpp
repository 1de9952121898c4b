#include "fia/tensor.hpp"

#include <cmath>
#include <limits>

namespace fia {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return n;
}

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_product(shape_) != data_.size())
        throw DimensionError("tensor: shape product does not match data length");
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
    Tensor t(std::move(shape));
    for (double& x : t.data_) x = value;
    return t;
}

Tensor Tensor::identity(std::size_t n) {
    Tensor t({n, n});
    for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
    std::size_t r = rows.size();
    std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw DimensionError("tensor: ragged matrix literal");
        data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({r, c}, std::move(data));
}

Tensor Tensor::vector(std::vector<double> entries) {
    std::size_t n = entries.size();
    return Tensor({n}, std::move(entries));
}

std::size_t Tensor::extent(std::size_t axis) const {
    if (axis >= shape_.size()) throw DimensionError("tensor: axis out of range");
    return shape_[axis];
}

std::size_t Tensor::rows() const {
    if (rank() != 2) throw DimensionError("tensor: rows() requires rank 2");
    return shape_[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) throw DimensionError("tensor: cols() requires rank 2");
    return shape_[1];
}

double& Tensor::at(std::size_t i, std::size_t j) {
    return data_[i * cols() + j];
}

double Tensor::at(std::size_t i, std::size_t j) const {
    return data_[i * cols() + j];
}

std::span<double> Tensor::row(std::size_t i) {
    std::size_t c = cols();
    return std::span<double>(data_.data() + i * c, c);
}

std::span<const double> Tensor::row(std::size_t i) const {
    std::size_t c = cols();
    return std::span<const double>(data_.data() + i * c, c);
}

bool Tensor::all_finite(bool allow_neg_inf) const {
    for (double x : data_) {
        if (std::isfinite(x)) continue;
        if (allow_neg_inf && x == -std::numeric_limits<double>::infinity()) continue;
        return false;
    }
    return true;
}

} // namespace fia
