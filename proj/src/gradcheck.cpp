#include "fia/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace fia {

Tensor numeric_gradient(const ScalarField& f, const Tensor& x, double h) {
    if (!(h > 0.0)) throw ParameterError("grad_check: step must be positive");
    Tensor g = Tensor::zeros(x.shape());
    Tensor probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        probe[i] = x[i] + h;
        const double fp = f(probe);
        probe[i] = x[i] - h;
        const double fm = f(probe);
        probe[i] = x[i];
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw EvaluationError("grad_check: function not finite at perturbed point");
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

GradCheckReport grad_check(const ScalarField& f, const Tensor& x, const Tensor& analytic_grad,
                           double h) {
    if (!analytic_grad.same_shape(x))
        throw DimensionError("grad_check: gradient shape must match input");
    const Tensor numeric = numeric_gradient(f, x, h);
    GradCheckReport report;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double a = analytic_grad[i];
        const double n = numeric[i];
        const double denom = std::max({1e-8, std::abs(a), std::abs(n)});
        const double rel = std::abs(a - n) / denom;
        if (rel >= report.max_rel_err) {
            report.max_rel_err = rel;
            report.worst_coordinate = i;
            report.analytic = a;
            report.numeric = n;
        }
    }
    return report;
}

} // namespace fia
