#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "fia/linalg.hpp"
#include "fia/quadrature.hpp"
#include "fia/rng.hpp"
#include "fia/serialize.hpp"
#include "fia/tensor.hpp"

using namespace fia;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = 3.14159265358979323846;

Tensor random_matrix(Rng& rng, std::size_t r, std::size_t c) {
    Tensor t({r, c});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-2.0, 2.0);
    return t;
}

// Independent oracle: naive triple loop in (i, j, k) order.
Tensor matmul_oracle(const Tensor& a, const Tensor& b) {
    Tensor out({a.rows(), b.cols()});
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j)
            for (std::size_t k = 0; k < a.cols(); ++k)
                out.at(i, j) += a.at(i, k) * b.at(k, j);
    return out;
}
} // namespace

TEST_CASE("tensor shape invariants") {
    Tensor t({2, 3});
    CHECK(t.size() == 6);
    CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0, 3.0}), DimensionError);
    CHECK(Tensor::matrix({{1, 2}, {3, 4}}).at(1, 0) == 3.0);
}

TEST_CASE("matmul identity and projector") {
    const Tensor m = Tensor::matrix({{1, 2}, {3, 4}});
    const Tensor im = matmul(Tensor::identity(2), m);
    for (std::size_t i = 0; i < 4; ++i) CHECK(im[i] == m[i]);

    const Tensor p = matmul(Tensor::matrix({{1, 0}, {0, 0}}), Tensor::matrix({{5, 6}, {7, 8}}));
    CHECK(p.at(0, 0) == 5.0);
    CHECK(p.at(0, 1) == 6.0);
    CHECK(p.at(1, 0) == 0.0);
    CHECK(p.at(1, 1) == 0.0);
}

TEST_CASE("matmul matches triple-loop oracle on random instances") {
    Rng rng(1234);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t m = 1 + rng.below(8), k = 1 + rng.below(8), p = 1 + rng.below(8);
        const Tensor a = random_matrix(rng, m, k);
        const Tensor b = random_matrix(rng, k, p);
        const Tensor got = matmul(a, b);
        const Tensor want = matmul_oracle(a, b);
        for (std::size_t i = 0; i < got.size(); ++i) {
            const double denom = std::max(1.0, std::abs(want[i]));
            CHECK(std::abs(got[i] - want[i]) / denom <= 1e-12);
        }
    }
    CHECK_THROWS_AS(matmul(Tensor({2, 3}), Tensor({2, 3})), DimensionError);
}

TEST_CASE("matmul_t transpose flags against explicit transpose") {
    Rng rng(77);
    const Tensor a = random_matrix(rng, 3, 5);
    const Tensor b = random_matrix(rng, 3, 4);
    const Tensor want = matmul(transpose(a), b);
    const Tensor got = matmul_t(a, b, true, false);
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-14));
}

TEST_CASE("softmax_rows examples") {
    const Tensor u = softmax_rows(Tensor::matrix({{0, 0, 0}}));
    for (std::size_t j = 0; j < 3; ++j) CHECK(u[j] == doctest::Approx(1.0 / 3).epsilon(1e-14));

    const Tensor masked = softmax_rows(Tensor::matrix({{-kInf, 0}}));
    CHECK(masked[0] == 0.0);
    CHECK(masked[1] == 1.0);

    // Direct exponentiation oracle for [ln 1, ln 2, ln 3].
    const Tensor probs =
        softmax_rows(Tensor::matrix({{std::log(1.0), std::log(2.0), std::log(3.0)}}));
    CHECK(probs[0] == doctest::Approx(1.0 / 6).epsilon(1e-13));
    CHECK(probs[1] == doctest::Approx(2.0 / 6).epsilon(1e-13));
    CHECK(probs[2] == doctest::Approx(3.0 / 6).epsilon(1e-13));

    CHECK_THROWS_AS(softmax_rows(Tensor::matrix({{-kInf, -kInf}})), DegenerateRowError);
}

TEST_CASE("softmax_rows rows sum to one and shift invariance") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        Tensor x = random_matrix(rng, 4, 6);
        const Tensor p = softmax_rows(x);
        for (std::size_t i = 0; i < 4; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < 6; ++j) {
                CHECK(p.at(i, j) >= 0.0);
                sum += p.at(i, j);
            }
            CHECK(std::abs(sum - 1.0) <= 1e-12);
        }
        Tensor shifted = x;
        const double c = rng.uniform(-30.0, 30.0);
        for (std::size_t j = 0; j < 6; ++j) shifted.at(1, j) += c;
        const Tensor q = softmax_rows(shifted);
        for (std::size_t j = 0; j < 6; ++j)
            CHECK(q.at(1, j) == doctest::Approx(p.at(1, j)).epsilon(1e-12));
    }
}

TEST_CASE("quad_integrate textbook values") {
    CHECK(std::abs(quad_adaptive([](double x) { return std::sin(x); }, 0.0, kPi) - 2.0) <=
          1e-10);
    CHECK(std::abs(quad_integrate([](double x) { return x; }, -1.0, 1.0, 64)) <= 1e-14);

    // Simpson is exact for cubics.
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2), c = rng.uniform(-2, 2),
                     d = rng.uniform(-2, 2);
        const auto cubic = [&](double x) { return ((a * x + b) * x + c) * x + d; };
        const auto anti = [&](double x) {
            return ((a / 4 * x + b / 3) * x + c / 2) * x * x + d * x;
        };
        const double lo = rng.uniform(-1.5, 0.0), hi = rng.uniform(0.5, 2.0);
        CHECK(std::abs(quad_integrate(cubic, lo, hi, 8) - (anti(hi) - anti(lo))) <= 1e-13);
    }

    CHECK_THROWS_AS(quad_integrate([](double x) { return x; }, 0.0, 1.0, 1), ParameterError);
    CHECK_THROWS_AS(
        quad_integrate([](double x) { return 1.0 / x; }, -1.0, 1.0, 9),
        EvaluationError);
}

TEST_CASE("sinc-squared window integral approaches pi") {
    const auto sinc2 = [](double x) {
        if (std::abs(x) < 1e-8) return 1.0;
        const double s = std::sin(x) / x;
        return s * s;
    };
    const double narrow = quad_adaptive(sinc2, -50.0, 50.0, 1e-9, 512);
    const double wide = quad_adaptive(sinc2, -400.0, 400.0, 1e-9, 4096);
    CHECK(std::abs(narrow - kPi) < 0.05);        // pi minus the ~2/50 tail
    CHECK(std::abs(wide - kPi) < 0.01);          // tail shrinks as the window grows
    CHECK(std::abs(wide - kPi) < std::abs(narrow - kPi));
}

TEST_CASE("rng determinism and substreams") {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());

    Rng c(42), d(43);
    bool differs = false;
    for (int i = 0; i < 10; ++i) differs = differs || (c.next_u64() != d.next_u64());
    CHECK(differs);

    Rng root(7);
    Rng s0 = root.substream(0), s1 = root.substream(1), s0b = root.substream(0);
    CHECK(s0.next_u64() == s0b.next_u64());
    CHECK(s0.next_u64() != s1.next_u64());
}

TEST_CASE("rng stream is frozen across versions") {
    // Known-answer guard: changing the generator would silently invalidate
    // every seeded artifact.
    Rng r(42);
    CHECK(r.next_u64() == 6332618229526065668ull);
    CHECK(r.next_u64() == 17630415256238047317ull);
    CHECK(r.next_u64() == 8971565426155258802ull);
}

TEST_CASE("gaussian_sample moments and determinism") {
    Rng rng(99);
    const double mean[2] = {0.0, 0.0};
    const std::size_t n = 10000;
    const Tensor x = gaussian_sample(rng, std::span<const double>(mean, 2), 1.0, n);
    for (std::size_t d = 0; d < 2; ++d) {
        double m = 0.0;
        for (std::size_t i = 0; i < n; ++i) m += x.at(i, d);
        m /= static_cast<double>(n);
        CHECK(std::abs(m) <= 5.0 / std::sqrt(static_cast<double>(n)));
    }

    Rng r1(5), r2(5);
    const double zero = 0.0;
    const Tensor a = gaussian_sample(r1, std::span<const double>(&zero, 1), 1.0, 1);
    const Tensor b = gaussian_sample(r2, std::span<const double>(&zero, 1), 1.0, 1);
    CHECK(a[0] == b[0]);

    Rng r3(13);
    const Tensor y = gaussian_sample(r3, std::span<const double>(&zero, 1), 2.0, 10000);
    double m = 0.0, v = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) m += y[i];
    m /= static_cast<double>(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) v += (y[i] - m) * (y[i] - m);
    v /= static_cast<double>(y.size() - 1);
    CHECK(v >= 3.6);
    CHECK(v <= 4.4);

    CHECK_THROWS_AS(gaussian_sample(r3, std::span<const double>(&zero, 1), 0.0, 3),
                    ParameterError);
}

TEST_CASE("tensor serialization round trip") {
    Rng rng(314);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t r = 1 + rng.below(5), c = 1 + rng.below(7);
        Tensor t = random_matrix(rng, r, c);
        t[0] = -0.0;
        std::stringstream ss;
        write_tensor(ss, t);
        const Tensor back = read_tensor(ss);
        REQUIRE(back.same_shape(t));
        for (std::size_t i = 0; i < t.size(); ++i) CHECK(back[i] == t[i]);
    }
}

TEST_CASE("csv number formatting round trips") {
    CHECK(format_double(1.0 / 3.0) == "0.33333333333333331");
    CHECK(std::stod(format_double(kPi)) == kPi);
}
