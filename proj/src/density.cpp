#include "fia/density.hpp"

#include <cmath>

#include "fia/quadrature.hpp"

namespace fia {

namespace {
constexpr double kPi = 3.14159265358979323846264338327950288;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double gaussian_pdf1(double x, double mean, double sigma) {
    const double z = (x - mean) / sigma;
    return kInvSqrt2Pi / sigma * std::exp(-0.5 * z * z);
}
} // namespace

DensityModel DensityModel::gaussian(std::size_t dim, double mean, double sigma) {
    if (!(sigma > 0.0)) throw ParameterError("gaussian density: sigma must be positive");
    DensityModel m;
    m.family_ = "gaussian";
    m.dim_ = dim;
    m.params_ = {mean, sigma};
    m.smoothness_ = {Smoothness::supersmooth, 2.0};
    return m;
}

DensityModel DensityModel::cauchy(std::size_t dim, double location, double gamma) {
    if (!(gamma > 0.0)) throw ParameterError("cauchy density: gamma must be positive");
    DensityModel m;
    m.family_ = "cauchy";
    m.dim_ = dim;
    m.params_ = {location, gamma};
    m.smoothness_ = {Smoothness::supersmooth, 1.0};
    return m;
}

DensityModel DensityModel::laplace(std::size_t dim, double mean, double scale) {
    if (!(scale > 0.0)) throw ParameterError("laplace density: scale must be positive");
    DensityModel m;
    m.family_ = "laplace";
    m.dim_ = dim;
    m.params_ = {mean, scale};
    m.smoothness_ = {Smoothness::ordinary_smooth, 2.0};
    return m;
}

DensityModel DensityModel::gaussian_mixture(std::size_t dim, double mean1, double mean2,
                                            double sigma, double weight1) {
    if (!(sigma > 0.0)) throw ParameterError("mixture density: sigma must be positive");
    if (!(weight1 > 0.0 && weight1 < 1.0))
        throw ParameterError("mixture density: weight must lie in (0, 1)");
    DensityModel m;
    m.family_ = "gaussian-mixture";
    m.dim_ = dim;
    m.params_ = {mean1, mean2, sigma, weight1};
    m.smoothness_ = {Smoothness::supersmooth, 2.0};
    return m;
}

double DensityModel::pdf1(double x) const {
    if (family_ == "gaussian") return gaussian_pdf1(x, params_[0], params_[1]);
    if (family_ == "cauchy") {
        const double z = (x - params_[0]) / params_[1];
        return 1.0 / (kPi * params_[1] * (1.0 + z * z));
    }
    if (family_ == "laplace")
        return 0.5 / params_[1] * std::exp(-std::abs(x - params_[0]) / params_[1]);
    // gaussian-mixture
    return params_[3] * gaussian_pdf1(x, params_[0], params_[2]) +
           (1.0 - params_[3]) * gaussian_pdf1(x, params_[1], params_[2]);
}

double DensityModel::pdf(std::span<const double> x) const {
    if (x.size() != dim_) throw DimensionError("density pdf: dimension mismatch");
    double p = 1.0;
    for (double xi : x) p *= pdf1(xi);
    return p;
}

Tensor DensityModel::sample(Rng& rng, std::size_t n) const {
    Tensor out({n, dim_});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t d = 0; d < dim_; ++d) {
            double x;
            if (family_ == "gaussian") {
                x = params_[0] + params_[1] * rng.normal();
            } else if (family_ == "cauchy") {
                // Inverse CDF.
                x = params_[0] + params_[1] * std::tan(kPi * (rng.uniform() - 0.5));
            } else if (family_ == "laplace") {
                // Difference of two exponentials.
                const double e1 = -std::log(1.0 - rng.uniform());
                const double e2 = -std::log(1.0 - rng.uniform());
                x = params_[0] + params_[1] * (e1 - e2);
            } else { // gaussian-mixture
                const double mean = rng.uniform() < params_[3] ? params_[0] : params_[1];
                x = mean + params_[2] * rng.normal();
            }
            out.at(i, d) = x;
        }
    }
    return out;
}

double DensityModel::center() const {
    if (family_ == "gaussian-mixture") return 0.5 * (params_[0] + params_[1]);
    return params_[0];
}

double DensityModel::certified_halfwidth(double tail_mass) const {
    // Per-coordinate tail bound; D coordinates get tail_mass / D each.
    const double per_dim = tail_mass / static_cast<double>(dim_);
    if (family_ == "gaussian" || family_ == "gaussian-mixture") {
        const double sigma = family_ == "gaussian" ? params_[1] : params_[2];
        const double spread =
            family_ == "gaussian-mixture" ? std::abs(params_[1] - params_[0]) * 0.5 : 0.0;
        // Two-sided Gaussian tail: 2 exp(-w^2 / 2sigma^2) <= per_dim.
        const double w = sigma * std::sqrt(2.0 * std::log(2.0 / per_dim));
        return w + spread;
    }
    if (family_ == "cauchy") {
        // Two-sided tail ~ 2 gamma / (pi w).
        return 2.0 * params_[1] / (kPi * per_dim);
    }
    // laplace: two-sided tail = exp(-w / b).
    return params_[1] * std::log(1.0 / per_dim) + params_[1];
}

double density_mass(const DensityModel& model, double tail_mass) {
    if (model.dim() > 2)
        throw ParameterError("density_mass: quadrature check supports D <= 2 only");
    const double w = model.certified_halfwidth(tail_mass);
    const double c = model.center();

    // Geometric segmentation so heavy tails (Cauchy) stay cheap.
    std::vector<double> cuts{0.0, 1.0};
    while (cuts.back() < w) cuts.push_back(cuts.back() * 2.0);
    cuts.back() = w;

    auto line_mass = [&](const ScalarFn& f) {
        double acc = 0.0;
        for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
            acc += quad_adaptive(f, c + cuts[s], c + cuts[s + 1], 1e-11, 64);
            acc += quad_adaptive(f, c - cuts[s + 1], c - cuts[s], 1e-11, 64);
        }
        return acc;
    };

    if (model.dim() == 1)
        return line_mass([&](double x) { return model.pdf1(x); });
    // Product form: mass factorizes into identical 1-D integrals.
    const double m1 = line_mass([&](double x) { return model.pdf1(x); });
    return m1 * m1;
}

} // namespace fia
