#pragma once

#include <span>

#include "fia/rng.hpp"
#include "fia/tensor.hpp"

namespace fia {

// Matrix product with a fixed left-to-right summation order per output
// element, so results are bit-reproducible across runs.
Tensor matmul(const Tensor& a, const Tensor& b);

// As matmul but with optional transposes applied to the operands.
Tensor matmul_t(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b);

// Row-wise softmax with max subtraction. Entries may be -inf (masked); they
// map to exact zeros. A row with no finite entry raises DegenerateRowError.
Tensor softmax_rows(const Tensor& x);

// log(sum(exp(x_i))) with max subtraction; returns -inf for an all--inf span.
double log_sum_exp(std::span<const double> x);

double squared_distance(std::span<const double> a, std::span<const double> b);
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

Tensor transpose(const Tensor& a);

// n rows of i.i.d. isotropic Gaussian draws centred at `mean` with common
// standard deviation sigma > 0.
Tensor gaussian_sample(Rng& rng, std::span<const double> mean, double sigma, std::size_t n);

} // namespace fia
