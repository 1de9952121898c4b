#pragma once

#include <span>
#include <string>
#include <vector>

#include "fia/rng.hpp"
#include "fia/tensor.hpp"

namespace fia {

// Fourier-tail decay class of a density: exponential (supersmooth) or
// polynomial (ordinary smooth), with its order.
enum class Smoothness { supersmooth, ordinary_smooth };

struct SmoothnessTag {
    Smoothness kind = Smoothness::supersmooth;
    double order = 2.0; // alpha for supersmooth, beta for ordinary smooth
};

// Product-form test densities over R^D: each coordinate is i.i.d. from the
// named 1-D family. Gaussian and Cauchy exemplify the supersmooth class,
// Laplace the ordinary smooth one; the two-component Gaussian mixture gives
// a multimodal supersmooth target.
class DensityModel {
  public:
    static DensityModel gaussian(std::size_t dim, double mean, double sigma);
    static DensityModel cauchy(std::size_t dim, double location, double gamma);
    static DensityModel laplace(std::size_t dim, double mean, double scale);
    // weight on the first component; both components share sigma.
    static DensityModel gaussian_mixture(std::size_t dim, double mean1, double mean2,
                                         double sigma, double weight1);

    double pdf(std::span<const double> x) const;
    double pdf1(double x) const; // one-coordinate marginal
    Tensor sample(Rng& rng, std::size_t n) const;

    std::size_t dim() const { return dim_; }
    const SmoothnessTag& smoothness() const { return smoothness_; }
    const std::string& family() const { return family_; }

    // Half-width W such that the mass outside [-W+center, W+center]^D is
    // below tail_mass; used to certify quadrature windows.
    double certified_halfwidth(double tail_mass) const;
    double center() const;

  private:
    std::string family_;
    std::size_t dim_ = 1;
    std::vector<double> params_;
    SmoothnessTag smoothness_;
};

// Quadrature check that the pdf integrates to one (D = 1 and 2 only);
// returns the numeric mass over the certified window.
double density_mass(const DensityModel& model, double tail_mass = 1e-7);

} // namespace fia
