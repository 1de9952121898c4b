#include "fia/quadrature.hpp"

#include <cmath>

namespace fia {

namespace {

double eval_checked(const ScalarFn& f, double x) {
    const double y = f(x);
    if (!std::isfinite(y)) throw EvaluationError("quadrature: integrand not finite");
    return y;
}

} // namespace

double quad_integrate(const ScalarFn& f, double lo, double hi, int n_panels) {
    if (n_panels < 2) throw ParameterError("quad_integrate: need at least 2 panels");
    const double h = (hi - lo) / n_panels;
    // Simpson per panel: (h/6) * (f(a) + 4 f(mid) + f(b)); endpoints shared.
    double ends = eval_checked(f, lo) + eval_checked(f, hi);
    double interior = 0.0;
    for (int i = 1; i < n_panels; ++i) interior += eval_checked(f, lo + i * h);
    double mids = 0.0;
    for (int i = 0; i < n_panels; ++i) mids += eval_checked(f, lo + (i + 0.5) * h);
    return (h / 6.0) * (ends + 2.0 * interior + 4.0 * mids);
}

double quad_adaptive(const ScalarFn& f, double lo, double hi, double tol, int init_panels,
                     int max_doublings) {
    int n = init_panels < 2 ? 2 : init_panels;
    double prev = quad_integrate(f, lo, hi, n);
    for (int pass = 0; pass < max_doublings; ++pass) {
        n *= 2;
        const double cur = quad_integrate(f, lo, hi, n);
        if (std::abs(cur - prev) < tol) return cur;
        prev = cur;
    }
    throw EvaluationError("quad_adaptive: did not converge to requested tolerance");
}

} // namespace fia
