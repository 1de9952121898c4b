#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "fia/errors.hpp"

namespace fia {

// Dense row-major tensor of 64-bit floats. This is the single numeric
// container used throughout the library. Values are treated as immutable
// once an operation has produced them; sharing across threads read-only is
// safe.
class Tensor {
  public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<std::size_t> shape, double value);
    static Tensor scalar(double value) { return Tensor({1}, {value}); }
    static Tensor identity(std::size_t n);
    // Row-major 2-D literal, e.g. Tensor::matrix({{1,2},{3,4}}).
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
    static Tensor vector(std::vector<double> entries);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    std::size_t extent(std::size_t axis) const;

    // Matrix accessors; throw DimensionError when rank != 2.
    std::size_t rows() const;
    std::size_t cols() const;
    double& at(std::size_t i, std::size_t j);
    double at(std::size_t i, std::size_t j) const;
    std::span<double> row(std::size_t i);
    std::span<const double> row(std::size_t i) const;

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    // True when every entry is finite. Operations whose contract permits
    // -inf entries (log-domain weights) check with allow_neg_inf = true.
    bool all_finite(bool allow_neg_inf = false) const;

  private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

std::size_t shape_product(const std::vector<std::size_t>& shape);

} // namespace fia
