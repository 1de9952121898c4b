#pragma once

#include <span>
#include <vector>

#include "fia/errors.hpp"

namespace fia {

// Guard for the removable singularity of sin(u)/u. Below taylor_threshold
// the two-term series 1 - u^2/6 + u^4/120 is used; at 64-bit precision its
// truncation error there is below the roundoff of the direct quotient.
struct SincConfig {
    double taylor_threshold = 1e-4;
};

double sinc(double u, const SincConfig& cfg = SincConfig{});

// d/du log|sinc(u)| = cot(u) - 1/u, with the series -u/3 - u^3/45 under the
// same threshold so the value is exactly 0 at u = 0.
double log_sinc_derivative(double u, const SincConfig& cfg = SincConfig{});

// The outer function phi(x) = x^l applied to each sinc factor, together with
// its normalization constant A = integral of phi(sin z / z) over the line and
// the moment order m (largest j0 with integral of phi(sinc z) z^j = 0 for all
// 1 <= j <= j0). Even exponents give nonnegative kernels; odd exponents are
// supported only through the signed evaluation path.
struct PhiKernel {
    int exponent = 4;
    double normalization = 0.0; // A; defined for even exponents only
    int moment_order = 0;
    bool nonnegative = false;

    static PhiKernel make(int exponent);
};

// A = integral over R of (sin z / z)^l dz for even l, by window quadrature
// with an analytic tail correction certified below 1e-9. Odd l raises
// UnsupportedNormalizationError (that integral is only conditionally
// convergent and the signed path never normalizes by it).
double phi_normalization(int exponent);

// integral over R of (sin z / z)^l * z^j dz estimated on a symmetric window;
// used to establish the moment order.
double phi_moment(int exponent, int j, double window = 200.0);

// Closed form of integral over R of (sin z / z)^l dz, valid for every l >= 1
// (for odd l as the conditionally convergent improper integral). The even
// cases serve as an independent cross-check of phi_normalization; the odd
// cases scale the signed diagnostic density.
double sinc_power_integral_closed_form(int exponent);

// Per-dimension bandwidth; scalar mode broadcasts one value over all
// coordinates and gradients reduce back to one number.
struct Bandwidth {
    std::vector<double> values;
    bool per_dim = false;

    static Bandwidth scalar(double r) { return Bandwidth{{r}, false}; }
    static Bandwidth vector(std::vector<double> r) { return Bandwidth{std::move(r), true}; }
    double at(std::size_t d) const { return per_dim ? values[d] : values[0]; }
    std::size_t size() const { return values.size(); }
};

// log of the product over coordinates of phi(sinc(R_d (q_d - k_d))), for an
// even-exponent kernel. Exactly -inf when any sinc factor lies within 1e-12
// of zero (such pairs are treated as masked). exp() of the result agrees
// with the signed product to 1e-12 relative whenever that product exceeds
// 1e-300.
double fourier_log_weight(std::span<const double> q, std::span<const double> k,
                          const Bandwidth& r, const PhiKernel& kernel,
                          const SincConfig& cfg = SincConfig{});

// Direct product, any exponent; may be negative for odd exponents.
double fourier_weight_signed(std::span<const double> q, std::span<const double> k,
                             const Bandwidth& r, const PhiKernel& kernel,
                             const SincConfig& cfg = SincConfig{});

struct FourierLogWeightGrad {
    std::vector<double> dq; // D entries
    std::vector<double> dk; // D entries
    std::vector<double> dr; // D entries (per-dim R) or 1 entry (scalar R)
};

// Analytic partials of fourier_log_weight with respect to q, k and R. The
// weight must be finite: a pair at or within 1e-12 of a sinc zero raises
// SingularGradientError (callers mask that pair instead).
FourierLogWeightGrad fourier_log_weight_grad(std::span<const double> q,
                                             std::span<const double> k, const Bandwidth& r,
                                             const PhiKernel& kernel,
                                             const SincConfig& cfg = SincConfig{});

// Numeric 1-D Fourier transform (1/pi) * integral of R phi(sinc(R x)) cos(t x) dx
// for exponent 1 or 2; agrees with the box indicator (l=1) resp. the triangle
// (2 - |t/R|)/2 on [-2R, 2R] (l=2) within 2e-2 away from the kink/discontinuity.
double kernel_fourier_transform_check(int exponent, double r, double t);

// Closed forms of the l=1 / l=2 transforms, exposed for tests and the CLI.
double band_limit_closed_form(int exponent, double r, double t);

} // namespace fia
