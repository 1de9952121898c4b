#pragma once

#include <functional>

#include "fia/tensor.hpp"

namespace fia {

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::size_t worst_coordinate = 0;
    double analytic = 0.0; // analytic derivative at the worst coordinate
    double numeric = 0.0;  // central difference at the worst coordinate
};

using ScalarField = std::function<double(const Tensor&)>;

// Central-difference probe of an analytic gradient: perturbs each coordinate
// of x by +-h and compares (f(x+h e_i) - f(x-h e_i)) / 2h against
// analytic_grad. Relative error uses max(1e-8, |analytic|, |numeric|) as the
// denominator so exact zero gradients do not blow up the ratio.
GradCheckReport grad_check(const ScalarField& f, const Tensor& x, const Tensor& analytic_grad,
                           double h = 1e-4);

// Convenience wrapper that obtains the numeric gradient alone.
Tensor numeric_gradient(const ScalarField& f, const Tensor& x, double h = 1e-4);

} // namespace fia
