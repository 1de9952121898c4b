#pragma once

#include <functional>

#include "fia/errors.hpp"

namespace fia {

using ScalarFn = std::function<double(double)>;

// Composite Simpson rule with n_panels panels, each sampled at its endpoints
// and midpoint; exact for polynomials of degree <= 3. Every evaluation is
// checked for finiteness (EvaluationError otherwise).
double quad_integrate(const ScalarFn& f, double lo, double hi, int n_panels);

// Doubles the panel count until two successive Simpson estimates differ by
// less than tol (or max_doublings is exhausted, which raises).
double quad_adaptive(const ScalarFn& f, double lo, double hi, double tol = 1e-10,
                     int init_panels = 16, int max_doublings = 24);

} // namespace fia
