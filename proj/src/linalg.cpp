#include "fia/linalg.hpp"

#include <cmath>
#include <limits>

namespace fia {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
} // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows())
        throw DimensionError("matmul: inner dimensions disagree");
    const std::size_t m = a.rows(), k = a.cols(), p = b.cols();
    Tensor out({m, p});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            double acc = 0.0;
            for (std::size_t t = 0; t < k; ++t) acc += a.at(i, t) * b.at(t, j);
            out.at(i, j) = acc;
        }
    }
    return out;
}

Tensor matmul_t(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b) {
    if (a.rank() != 2 || b.rank() != 2)
        throw DimensionError("matmul_t: operands must be rank 2");
    const std::size_t m = trans_a ? a.cols() : a.rows();
    const std::size_t k = trans_a ? a.rows() : a.cols();
    const std::size_t kb = trans_b ? b.cols() : b.rows();
    const std::size_t p = trans_b ? b.rows() : b.cols();
    if (k != kb) throw DimensionError("matmul_t: inner dimensions disagree");
    Tensor out({m, p});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            double acc = 0.0;
            for (std::size_t t = 0; t < k; ++t) {
                const double av = trans_a ? a.at(t, i) : a.at(i, t);
                const double bv = trans_b ? b.at(j, t) : b.at(t, j);
                acc += av * bv;
            }
            out.at(i, j) = acc;
        }
    }
    return out;
}

Tensor softmax_rows(const Tensor& x) {
    const std::size_t m = x.rows(), n = x.cols();
    Tensor out({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        auto row = x.row(i);
        double mx = kNegInf;
        for (double v : row) {
            if (std::isnan(v) || v == std::numeric_limits<double>::infinity())
                throw EvaluationError("softmax_rows: entries must be finite or -inf");
            if (v > mx) mx = v;
        }
        if (mx == kNegInf)
            throw DegenerateRowError("softmax_rows: row has no finite entry");
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double e = row[j] == kNegInf ? 0.0 : std::exp(row[j] - mx);
            out.at(i, j) = e;
            sum += e;
        }
        for (std::size_t j = 0; j < n; ++j) out.at(i, j) /= sum;
    }
    return out;
}

double log_sum_exp(std::span<const double> x) {
    double mx = kNegInf;
    for (double v : x)
        if (v > mx) mx = v;
    if (mx == kNegInf) return kNegInf;
    double sum = 0.0;
    for (double v : x) sum += v == kNegInf ? 0.0 : std::exp(v - mx);
    return mx + std::log(sum);
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

Tensor transpose(const Tensor& a) {
    Tensor out({a.cols(), a.rows()});
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out.at(j, i) = a.at(i, j);
    return out;
}

Tensor gaussian_sample(Rng& rng, std::span<const double> mean, double sigma, std::size_t n) {
    if (!(sigma > 0.0)) throw ParameterError("gaussian_sample: sigma must be positive");
    const std::size_t d = mean.size();
    Tensor out({n, d});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) out.at(i, j) = mean[j] + sigma * rng.normal();
    return out;
}

} // namespace fia
