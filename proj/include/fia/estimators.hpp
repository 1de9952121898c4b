#pragma once

#include <array>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fia/density.hpp"
#include "fia/kernels.hpp"
#include "fia/rng.hpp"
#include "fia/tensor.hpp"

namespace fia {

// Gaussian kernel density estimate at x: (1/N) sum_j phi_sigma(x - k_j) with
// the isotropic Gaussian pdf. Strictly positive.
double gaussian_kde(const Tensor& samples, double sigma, std::span<const double> x);

// Sinc-product density estimate (R^D / (N A^D)) sum_i prod_d
// phi(sinc(R (x_d - k_id))). Nonnegative for even exponents; odd exponents
// return the signed value (diagnostics only).
double fourier_density(const Tensor& samples, double r, const PhiKernel& kernel,
                       std::span<const double> x);

// Evaluation lattice for integrated squared error; trapezoid weights, D <= 2.
struct Grid {
    std::size_t dim = 1;
    std::array<double, 2> lo{-6.0, -6.0};
    std::array<double, 2> hi{6.0, 6.0};
    std::array<std::size_t, 2> points{201, 201};

    static Grid line(double lo, double hi, std::size_t points);
    static Grid plane(double lo, double hi, std::size_t points_per_axis);
};

using DensityFn = std::function<double(std::span<const double>)>;
// Builds one realization of an estimator from a fresh sample; called once
// per Monte Carlo rep with that rep's RNG substream.
using EstimatorFactory = std::function<DensityFn(Rng&)>;

// Trapezoid-integrated squared error of a single estimate against the truth.
double integrated_squared_error(const DensityFn& estimate, const DensityModel& truth,
                                const Grid& grid);

// Mean integrated squared error over `reps` independent estimator draws.
// Raises CoverageError unless the grid holds at least 1 - 1e-4 of the
// truth's mass.
double mise(const EstimatorFactory& make_estimator, const DensityModel& truth,
            const Grid& grid, int reps, Rng& rng, int threads = 1);

// Gaussian-kernel regression: weighted average of value rows; the output
// lies in their convex hull.
std::vector<double> gaussian_nw_regress(const Tensor& keys, const Tensor& values,
                                        double sigma, std::span<const double> query);

// Sinc-product-kernel regression; the normalization constant and R^D cancel
// in the ratio, which is evaluated through log-weights. Raises
// EmptyNeighborhoodError when every weight underflows to zero.
std::vector<double> fourier_nw_regress(const Tensor& keys, const Tensor& values,
                                       const Bandwidth& r, const PhiKernel& kernel,
                                       std::span<const double> query, long query_index = -1);

// Computes Gaussian-kernel regression with sigma^2 = sqrt(D) and softmax
// attention on the same inputs through two independent code paths and
// returns the maximum absolute elementwise gap (contractually <= 1e-10 for
// unit-norm keys).
double softmax_equivalence_check(const Tensor& keys, const Tensor& values,
                                 const Tensor& queries);

// Synthetic regression data: keys ~ key_density, values = f(keys) + Gaussian
// noise. f comes from a small library of named smooth functions.
struct RegressionProblem {
    Tensor keys;   // N x D
    Tensor values; // N x 1
    std::string true_f;
    double noise_sigma = 0.0;

    static RegressionProblem synthesize(const DensityModel& key_density,
                                        const std::string& true_f, double noise_sigma,
                                        std::size_t n, Rng& rng);
};

double true_function(const std::string& name, std::span<const double> x);

enum class RateKind { density_mise, regression_mse };
enum class RateEstimator { fourier, gaussian };

struct RateConfig {
    RateKind kind = RateKind::density_mise;
    RateEstimator estimator = RateEstimator::fourier;
    std::size_t dim = 1;
    int phi_exponent = 2;
    std::vector<std::size_t> n_ladder{100, 400, 1600};
    int reps = 50;
    // Bandwidth scale: R = r_constant * N^(1/(D+m+1)) for densities and
    // r_constant * N^(1/(2(m+1)+D)) for regression; the theory fixes only
    // the exponent, so the constant is a knob (default 1).
    double r_constant = 1.0;
    double gaussian_sigma = 0.5; // fixed-bandwidth comparison runs
    std::uint64_t seed = 1;
    int threads = 1;
    DensityModel key_density = DensityModel::gaussian(1, 0.0, 1.0);
    Grid grid = Grid::line(-6.0, 6.0, 201);
    // Regression-only settings.
    std::string true_f = "sin";
    double noise_sigma = 0.1;
    std::size_t n_test_points = 20;
    double test_lo = -2.0;
    double test_hi = 2.0;
};

struct RateRow {
    std::size_t n = 0;
    double r = 0.0;
    double error_mean = 0.0;
    double error_stderr = 0.0;
    double slope_so_far = 0.0; // log-log LS fit over rows up to this one
};

struct RateTable {
    std::vector<RateRow> rows;
    double final_slope = 0.0;
};

RateTable rate_experiment(const RateConfig& config);

void write_rate_csv(const std::string& path, const RateTable& table);

} // namespace fia
