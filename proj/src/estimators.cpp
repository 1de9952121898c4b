#include "fia/estimators.hpp"

#include <cmath>
#include <limits>

#include "fia/linalg.hpp"
#include "fia/parallel.hpp"
#include "fia/serialize.hpp"

namespace fia {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093454836;

double ipow(double x, int n) {
    double acc = 1.0;
    for (int i = 0; i < n; ++i) acc *= x;
    return acc;
}

// Least-squares slope of log(error) against log(N).
double loglog_slope(const std::vector<RateRow>& rows, std::size_t count) {
    if (count < 2) return 0.0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const double x = std::log(static_cast<double>(rows[i].n));
        const double y = std::log(rows[i].error_mean);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = static_cast<double>(count);
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace

double gaussian_kde(const Tensor& samples, double sigma, std::span<const double> x) {
    if (!(sigma > 0.0)) throw ParameterError("gaussian_kde: sigma must be positive");
    if (samples.rank() != 2 || samples.rows() < 1)
        throw ParameterError("gaussian_kde: need at least one sample");
    if (samples.cols() != x.size()) throw DimensionError("gaussian_kde: dimension mismatch");
    const std::size_t n = samples.rows(), d = samples.cols();
    const double log_norm = -0.5 * d * (kLog2Pi + 2.0 * std::log(sigma));
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        acc += std::exp(log_norm - 0.5 * squared_distance(x, samples.row(i)) / (sigma * sigma));
    return acc / static_cast<double>(n);
}

double fourier_density(const Tensor& samples, double r, const PhiKernel& kernel,
                       std::span<const double> x) {
    if (!(r > 0.0)) throw ParameterError("fourier_density: R must be positive");
    if (samples.rank() != 2 || samples.cols() != x.size())
        throw DimensionError("fourier_density: dimension mismatch");
    const std::size_t n = samples.rows(), d = samples.cols();
    const int l = kernel.exponent;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto ki = samples.row(i);
        double prod = 1.0;
        for (std::size_t c = 0; c < d; ++c) {
            const double s = sinc(r * (x[c] - ki[c]));
            if (std::abs(s) < 1e-12) { // same masking rule as the log weights
                prod = 0.0;
                break;
            }
            prod *= ipow(s, l);
        }
        acc += prod;
    }
    const double a =
        kernel.nonnegative ? kernel.normalization : sinc_power_integral_closed_form(l);
    return acc * std::pow(r / a, static_cast<double>(d)) / static_cast<double>(n);
}

Grid Grid::line(double lo, double hi, std::size_t points) {
    Grid g;
    g.dim = 1;
    g.lo[0] = lo;
    g.hi[0] = hi;
    g.points[0] = points;
    return g;
}

Grid Grid::plane(double lo, double hi, std::size_t points_per_axis) {
    Grid g;
    g.dim = 2;
    g.lo = {lo, lo};
    g.hi = {hi, hi};
    g.points = {points_per_axis, points_per_axis};
    return g;
}

namespace {

// Trapezoid quadrature of fn over the grid.
double grid_integral(const Grid& grid, const std::function<double(std::span<const double>)>& fn) {
    if (grid.dim < 1 || grid.dim > 2)
        throw ParameterError("grid: only D in {1, 2} supported");
    for (std::size_t a = 0; a < grid.dim; ++a)
        if (grid.points[a] < 2 || !(grid.hi[a] > grid.lo[a]))
            throw ParameterError("grid: need at least two points per axis");

    if (grid.dim == 1) {
        const std::size_t n = grid.points[0];
        const double h = (grid.hi[0] - grid.lo[0]) / static_cast<double>(n - 1);
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double x = grid.lo[0] + static_cast<double>(i) * h;
            const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
            acc += w * fn(std::span<const double>(&x, 1));
        }
        return acc * h;
    }
    const std::size_t n0 = grid.points[0], n1 = grid.points[1];
    const double h0 = (grid.hi[0] - grid.lo[0]) / static_cast<double>(n0 - 1);
    const double h1 = (grid.hi[1] - grid.lo[1]) / static_cast<double>(n1 - 1);
    double acc = 0.0;
    double xy[2];
    for (std::size_t i = 0; i < n0; ++i) {
        xy[0] = grid.lo[0] + static_cast<double>(i) * h0;
        const double w0 = (i == 0 || i == n0 - 1) ? 0.5 : 1.0;
        for (std::size_t j = 0; j < n1; ++j) {
            xy[1] = grid.lo[1] + static_cast<double>(j) * h1;
            const double w1 = (j == 0 || j == n1 - 1) ? 0.5 : 1.0;
            acc += w0 * w1 * fn(std::span<const double>(xy, 2));
        }
    }
    return acc * h0 * h1;
}

} // namespace

double integrated_squared_error(const DensityFn& estimate, const DensityModel& truth,
                                const Grid& grid) {
    return grid_integral(grid, [&](std::span<const double> x) {
        const double d = estimate(x) - truth.pdf(x);
        return d * d;
    });
}

double mise(const EstimatorFactory& make_estimator, const DensityModel& truth,
            const Grid& grid, int reps, Rng& rng, int threads) {
    if (reps < 1) throw ParameterError("mise: need at least one rep");
    if (grid.dim != truth.dim())
        throw DimensionError("mise: grid dimension must match the density");
    const double covered = grid_integral(grid, [&](std::span<const double> x) {
        return truth.pdf(x);
    });
    if (covered < 1.0 - 1e-4)
        throw CoverageError("mise: grid covers too little of the truth's mass");

    std::vector<double> errors(static_cast<std::size_t>(reps), 0.0);
    parallel_for(errors.size(), threads, [&](std::size_t rep) {
        Rng sub = rng.substream(rep);
        const DensityFn est = make_estimator(sub);
        errors[rep] = integrated_squared_error(est, truth, grid);
    });
    double acc = 0.0;
    for (double e : errors) acc += e;
    return acc / static_cast<double>(reps);
}

std::vector<double> gaussian_nw_regress(const Tensor& keys, const Tensor& values,
                                        double sigma, std::span<const double> query) {
    if (!(sigma > 0.0)) throw ParameterError("gaussian_nw_regress: sigma must be positive");
    if (keys.rank() != 2 || keys.rows() < 1 || keys.rows() != values.rows())
        throw DimensionError("gaussian_nw_regress: keys/values mismatch");
    if (keys.cols() != query.size())
        throw DimensionError("gaussian_nw_regress: query dimension mismatch");
    const std::size_t n = keys.rows(), dv = values.cols();
    // Log-domain weights with max subtraction; strictly positive after exp.
    std::vector<double> logw(n);
    double mx = kNegInf;
    for (std::size_t j = 0; j < n; ++j) {
        logw[j] = -0.5 * squared_distance(query, keys.row(j)) / (sigma * sigma);
        if (logw[j] > mx) mx = logw[j];
    }
    double denom = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        logw[j] = std::exp(logw[j] - mx);
        denom += logw[j];
    }
    std::vector<double> out(dv, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const double w = logw[j] / denom;
        for (std::size_t c = 0; c < dv; ++c) out[c] += w * values.at(j, c);
    }
    return out;
}

std::vector<double> fourier_nw_regress(const Tensor& keys, const Tensor& values,
                                       const Bandwidth& r, const PhiKernel& kernel,
                                       std::span<const double> query, long query_index) {
    if (keys.rank() != 2 || keys.rows() < 1 || keys.rows() != values.rows())
        throw DimensionError("fourier_nw_regress: keys/values mismatch");
    if (keys.cols() != query.size())
        throw DimensionError("fourier_nw_regress: query dimension mismatch");
    const std::size_t n = keys.rows(), dv = values.cols();
    std::vector<double> logw(n);
    double mx = kNegInf;
    for (std::size_t j = 0; j < n; ++j) {
        logw[j] = fourier_log_weight(query, keys.row(j), r, kernel);
        if (logw[j] > mx) mx = logw[j];
    }
    if (mx == kNegInf)
        throw EmptyNeighborhoodError("fourier_nw_regress: all weights are zero", query_index);
    double denom = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        logw[j] = logw[j] == kNegInf ? 0.0 : std::exp(logw[j] - mx);
        denom += logw[j];
    }
    std::vector<double> out(dv, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const double w = logw[j] / denom;
        if (w == 0.0) continue;
        for (std::size_t c = 0; c < dv; ++c) out[c] += w * values.at(j, c);
    }
    return out;
}

double softmax_equivalence_check(const Tensor& keys, const Tensor& values,
                                 const Tensor& queries) {
    if (keys.rank() != 2 || values.rank() != 2 || queries.rank() != 2 ||
        keys.rows() != values.rows() || keys.cols() != queries.cols())
        throw DimensionError("softmax_equivalence_check: shape mismatch");
    for (std::size_t j = 0; j < keys.rows(); ++j)
        if (std::abs(norm2(keys.row(j)) - 1.0) > 1e-9)
            throw ParameterError("softmax_equivalence_check: keys must be unit norm");

    const double d = static_cast<double>(keys.cols());
    const double sigma = std::pow(d, 0.25); // sigma^2 = sqrt(D)

    // Path 1: kernel regression with the isotropic Gaussian.
    // Path 2: softmax attention on scores q.k / sqrt(D).
    Tensor scores = matmul_t(queries, keys, false, true);
    for (double& s : scores.data()) s /= std::sqrt(d);
    const Tensor probs = softmax_rows(scores);
    const Tensor attention = matmul(probs, values);

    double max_gap = 0.0;
    for (std::size_t i = 0; i < queries.rows(); ++i) {
        const std::vector<double> reg = gaussian_nw_regress(keys, values, sigma, queries.row(i));
        for (std::size_t c = 0; c < values.cols(); ++c)
            max_gap = std::max(max_gap, std::abs(reg[c] - attention.at(i, c)));
    }
    return max_gap;
}

double true_function(const std::string& name, std::span<const double> x) {
    double s = 0.0;
    for (double xi : x) s += xi;
    if (name == "sin") return std::sin(s);
    if (name == "constant") return 1.0;
    if (name == "linear") return s;
    if (name == "gaussian-bump") return std::exp(-0.5 * s * s);
    throw ParameterError("true_function: unknown function " + name);
}

RegressionProblem RegressionProblem::synthesize(const DensityModel& key_density,
                                                const std::string& true_f, double noise_sigma,
                                                std::size_t n, Rng& rng) {
    if (noise_sigma < 0.0)
        throw ParameterError("regression problem: noise sigma must be nonnegative");
    RegressionProblem p;
    p.true_f = true_f;
    p.noise_sigma = noise_sigma;
    p.keys = key_density.sample(rng, n);
    p.values = Tensor({n, 1});
    for (std::size_t i = 0; i < n; ++i) {
        const double noise = noise_sigma > 0.0 ? noise_sigma * rng.normal() : 0.0;
        p.values.at(i, 0) = true_function(true_f, p.keys.row(i)) + noise;
    }
    return p;
}

RateTable rate_experiment(const RateConfig& config) {
    if (config.n_ladder.size() < 3)
        throw InsufficientDataError("rate_experiment: ladder needs at least 3 sizes");
    for (std::size_t i = 1; i < config.n_ladder.size(); ++i)
        if (config.n_ladder[i] <= config.n_ladder[i - 1])
            throw InsufficientDataError("rate_experiment: ladder must be strictly increasing");
    if (config.dim < 1 || config.dim > 2)
        throw ParameterError("rate_experiment: D must be 1 or 2");
    if (config.key_density.dim() != config.dim)
        throw DimensionError("rate_experiment: key density dimension mismatch");

    const PhiKernel kernel = PhiKernel::make(config.phi_exponent);
    const int m = kernel.moment_order; // 1 for even exponents
    const double dd = static_cast<double>(config.dim);
    Rng root(config.seed);

    // Fixed regression test points, shared by every rep and ladder size.
    std::vector<std::vector<double>> test_points;
    if (config.kind == RateKind::regression_mse) {
        if (config.dim == 1) {
            for (std::size_t i = 0; i < config.n_test_points; ++i) {
                const double t = config.n_test_points == 1
                                     ? 0.5
                                     : static_cast<double>(i) /
                                           static_cast<double>(config.n_test_points - 1);
                test_points.push_back({config.test_lo + t * (config.test_hi - config.test_lo)});
            }
        } else {
            Rng tp = root.substream(0xF1);
            const Tensor pts = config.key_density.sample(tp, config.n_test_points);
            for (std::size_t i = 0; i < pts.rows(); ++i)
                test_points.emplace_back(pts.row(i).begin(), pts.row(i).end());
        }
    }

    RateTable table;
    for (std::size_t step = 0; step < config.n_ladder.size(); ++step) {
        const std::size_t n = config.n_ladder[step];
        const double exponent = config.kind == RateKind::density_mise
                                    ? 1.0 / (dd + m + 1.0)
                                    : 1.0 / (2.0 * (m + 1.0) + dd);
        const double r = config.r_constant * std::pow(static_cast<double>(n), exponent);

        std::vector<double> errors(static_cast<std::size_t>(config.reps), 0.0);
        Rng ladder_rng = root.substream(step);
        parallel_for(errors.size(), config.threads, [&](std::size_t rep) {
            Rng sub = ladder_rng.substream(rep);
            if (config.kind == RateKind::density_mise) {
                const Tensor samples = config.key_density.sample(sub, n);
                const DensityFn est = [&](std::span<const double> x) {
                    return config.estimator == RateEstimator::fourier
                               ? fourier_density(samples, r, kernel, x)
                               : gaussian_kde(samples, config.gaussian_sigma, x);
                };
                errors[rep] = integrated_squared_error(est, config.key_density, config.grid);
            } else {
                const RegressionProblem problem = RegressionProblem::synthesize(
                    config.key_density, config.true_f, config.noise_sigma, n, sub);
                double mse = 0.0;
                for (const auto& x : test_points) {
                    const std::vector<double> fit =
                        config.estimator == RateEstimator::fourier
                            ? fourier_nw_regress(problem.keys, problem.values,
                                                 Bandwidth::scalar(r), kernel, x)
                            : gaussian_nw_regress(problem.keys, problem.values,
                                                  config.gaussian_sigma, x);
                    const double err = fit[0] - true_function(config.true_f, x);
                    mse += err * err;
                }
                errors[rep] = mse / static_cast<double>(test_points.size());
            }
        });

        double mean = 0.0;
        for (double e : errors) mean += e;
        mean /= static_cast<double>(config.reps);
        double var = 0.0;
        for (double e : errors) var += (e - mean) * (e - mean);
        const double stderr_ =
            config.reps > 1 ? std::sqrt(var / (config.reps * (config.reps - 1.0))) : 0.0;

        RateRow row;
        row.n = n;
        row.r = r;
        row.error_mean = mean;
        row.error_stderr = stderr_;
        table.rows.push_back(row);
        table.rows.back().slope_so_far = loglog_slope(table.rows, table.rows.size());
    }
    table.final_slope = table.rows.back().slope_so_far;
    return table;
}

void write_rate_csv(const std::string& path, const RateTable& table) {
    std::vector<std::vector<double>> rows;
    for (const auto& r : table.rows)
        rows.push_back({static_cast<double>(r.n), r.r, r.error_mean, r.error_stderr,
                        r.slope_so_far});
    write_csv(path, {"N", "R", "error_mean", "error_stderr", "slope_so_far"}, rows);
}

} // namespace fia
