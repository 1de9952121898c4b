#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "fia/autodiff.hpp"
#include "fia/gradcheck.hpp"
#include "fia/rng.hpp"

using namespace fia;

namespace {

Tensor random_tensor(Rng& rng, std::vector<std::size_t> shape, double lo = -1.0,
                     double hi = 1.0) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

using GraphBuilder = std::function<NodeId(Tape&, const std::vector<NodeId>&)>;

// Runs the builder to get analytic gradients via the tape, then probes every
// input coordinate with central differences on a flattened copy.
double max_grad_rel_err(const GraphBuilder& build, const std::vector<Tensor>& inputs,
                        double h = 1e-4) {
    Tape tape;
    std::vector<NodeId> ids;
    for (const Tensor& x : inputs) ids.push_back(tape.leaf(x));
    const NodeId loss = build(tape, ids);
    const std::vector<Tensor> adj = tape.backward(loss);

    std::size_t total = 0;
    for (const Tensor& x : inputs) total += x.size();
    Tensor flat({total}), analytic({total});
    std::size_t off = 0;
    for (std::size_t p = 0; p < inputs.size(); ++p) {
        for (std::size_t i = 0; i < inputs[p].size(); ++i) {
            flat[off + i] = inputs[p][i];
            analytic[off + i] = adj[ids[p]].size() ? adj[ids[p]][i] : 0.0;
        }
        off += inputs[p].size();
    }

    const auto f = [&](const Tensor& packed) {
        std::vector<Tensor> xs = inputs;
        std::size_t o = 0;
        for (Tensor& x : xs) {
            for (std::size_t i = 0; i < x.size(); ++i) x[i] = packed[o + i];
            o += x.size();
        }
        Tape t;
        std::vector<NodeId> nid;
        for (const Tensor& x : xs) nid.push_back(t.leaf(x));
        return t.value(build(t, nid))[0];
    };
    return grad_check(f, flat, analytic, h).max_rel_err;
}

// Scalarize a matrix output with a projection that is a pure function of
// the seed, so finite-difference rebuilds see the identical graph.
NodeId project_to_scalar(Tape& tape, NodeId out, std::uint64_t seed) {
    Rng prng(seed ^ 0x9d2c5680u);
    Tensor proj = random_tensor(prng, tape.value(out).shape(), -1.0, 1.0);
    return tape.sum(tape.mul(out, tape.leaf(std::move(proj), false)));
}

} // namespace

TEST_CASE("backward of sum is all ones") {
    Tape tape;
    Rng rng(1);
    const Tensor x = random_tensor(rng, {3, 4});
    const NodeId xid = tape.leaf(x);
    const NodeId loss = tape.sum(xid);
    const auto adj = tape.backward(loss);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(adj[xid][i] == 1.0);
}

TEST_CASE("backward of half square norm is the input") {
    Tape tape;
    Rng rng(2);
    const Tensor x = random_tensor(rng, {2, 5});
    const NodeId xid = tape.leaf(x);
    const NodeId loss = tape.scale(tape.sum(tape.mul(xid, xid)), 0.5);
    const auto adj = tape.backward(loss);
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(adj[xid][i] == doctest::Approx(x[i]).epsilon(1e-15));
}

TEST_CASE("two-class cross entropy matches finite differences") {
    Rng rng(3);
    const Tensor logits = random_tensor(rng, {1, 2}, -2.0, 2.0);
    const double rel = max_grad_rel_err(
        [](Tape& t, const std::vector<NodeId>& ids) {
            return t.cross_entropy_logits(ids[0], {1});
        },
        {logits}, 1e-5);
    CHECK(rel <= 1e-6);
}

TEST_CASE("backward requires a scalar loss") {
    Tape tape;
    const NodeId x = tape.leaf(Tensor({2, 2}));
    CHECK_THROWS_AS(tape.backward(x), ContractError);
}

TEST_CASE("tape ops validate shapes") {
    Tape tape;
    const NodeId a = tape.leaf(Tensor({2, 3}));
    const NodeId b = tape.leaf(Tensor({3, 2}));
    CHECK_THROWS_AS(tape.add(a, b), DimensionError);
    CHECK_THROWS_AS(tape.mul(a, b), DimensionError);
    CHECK_THROWS_AS(tape.slice_cols(a, 2, 4), DimensionError);
    CHECK_THROWS_AS(tape.cross_entropy_logits(a, {0}), DimensionError);
    CHECK_THROWS_AS(tape.embed_rows(a, {5}), DimensionError);
}

TEST_CASE("backward replay is bit-identical") {
    Tape tape;
    Rng rng(4);
    const NodeId a = tape.leaf(random_tensor(rng, {4, 4}));
    const NodeId b = tape.leaf(random_tensor(rng, {4, 4}));
    const NodeId prob = tape.softmax_rows_masked(tape.matmul(a, b), MaskMode::causal);
    const NodeId loss = tape.sum(tape.gelu(prob));
    const auto adj1 = tape.backward(loss);
    const auto adj2 = tape.backward(loss);
    REQUIRE(adj1.size() == adj2.size());
    for (std::size_t n = 0; n < adj1.size(); ++n) {
        REQUIRE(adj1[n].size() == adj2[n].size());
        for (std::size_t i = 0; i < adj1[n].size(); ++i) CHECK(adj1[n][i] == adj2[n][i]);
    }
}

TEST_CASE("per-op gradcheck across 20 seeds") {
    // Every registered op gets its own graph; inputs are resampled per seed.
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng(seed);

        SUBCASE("") {} // keep doctest quiet about empty case
        {
            // MatMul, all transpose flag combinations.
            const Tensor a = random_tensor(rng, {3, 4});
            const Tensor b = random_tensor(rng, {4, 2});
            CHECK(max_grad_rel_err(
                      [&](Tape& t, const std::vector<NodeId>& ids) {
                          return project_to_scalar(t, t.matmul(ids[0], ids[1]), seed);
                      },
                      {a, b}) <= 1e-5);
            const Tensor at = random_tensor(rng, {4, 3});
            CHECK(max_grad_rel_err(
                      [&](Tape& t, const std::vector<NodeId>& ids) {
                          return project_to_scalar(t, t.matmul(ids[0], ids[1], true, false), seed);
                      },
                      {at, b}) <= 1e-5);
            const Tensor bt = random_tensor(rng, {2, 4});
            CHECK(max_grad_rel_err(
                      [&](Tape& t, const std::vector<NodeId>& ids) {
                          return project_to_scalar(t, t.matmul(ids[0], ids[1], false, true), seed);
                      },
                      {a, bt}) <= 1e-5);
            CHECK(max_grad_rel_err(
                      [&](Tape& t, const std::vector<NodeId>& ids) {
                          return project_to_scalar(t, t.matmul(ids[0], ids[1], true, true), seed);
                      },
                      {at, bt}) <= 1e-5);
        }
        {
            const Tensor a = random_tensor(rng, {3, 3});
            const Tensor b = random_tensor(rng, {3, 3});
            CHECK(max_grad_rel_err(
                      [&](Tape& t, const std::vector<NodeId>& ids) {
                          return project_to_scalar(t, t.add(ids[0], ids[1]), seed);
                      },
                      {a, b}) <= 1e-5);
            CHECK(max_grad_rel_err(
                      [&](Tape& t, const std::vector<NodeId>& ids) {
                          return project_to_scalar(t, t.mul(ids[0], ids[1]), seed);
                      },
                      {a, b}) <= 1e-5);
            CHECK(max_grad_rel_err(
                      [&](Tape& t, const std::vector<NodeId>& ids) {
                          return project_to_scalar(t, t.scale(ids[0], -1.7), seed);
                      },
                      {a}) <= 1e-5);
            CHECK(max_grad_rel_err(
                      [&](Tape& t, const std::vector<NodeId>& ids) {
                          return project_to_scalar(t, t.exp_elem(ids[0]), seed);
                      },
                      {a}) <= 1e-5);
            CHECK(max_grad_rel_err(
                      [&](Tape& t, const std::vector<NodeId>& ids) {
                          return project_to_scalar(t, t.gelu(ids[0]), seed);
                      },
                      {a}) <= 1e-5);
        }
        {
            const Tensor a = random_tensor(rng, {4, 3});
            const Tensor bias = random_tensor(rng, {3});
            CHECK(max_grad_rel_err(
                      [&](Tape& t, const std::vector<NodeId>& ids) {
                          return project_to_scalar(t, t.add_row_vector(ids[0], ids[1]), seed);
                      },
                      {a, bias}) <= 1e-5);
        }
        {
            const Tensor x = random_tensor(rng, {3, 6});
            const Tensor gain = random_tensor(rng, {6}, 0.5, 1.5);
            const Tensor bias = random_tensor(rng, {6});
            CHECK(max_grad_rel_err(
                      [&](Tape& t, const std::vector<NodeId>& ids) {
                          return project_to_scalar(t, t.layer_norm(ids[0], ids[1], ids[2]), seed);
                      },
                      {x, gain, bias}) <= 1e-5);
        }
        {
            const Tensor scores = random_tensor(rng, {4, 4}, -2.0, 2.0);
            CHECK(max_grad_rel_err(
                      [&](Tape& t, const std::vector<NodeId>& ids) {
                          return project_to_scalar(
                              t, t.softmax_rows_masked(ids[0], MaskMode::none), seed);
                      },
                      {scores}) <= 1e-5);
            CHECK(max_grad_rel_err(
                      [&](Tape& t, const std::vector<NodeId>& ids) {
                          return project_to_scalar(
                              t, t.softmax_rows_masked(ids[0], MaskMode::causal), seed);
                      },
                      {scores}) <= 1e-5);
        }
        {
            const Tensor table = random_tensor(rng, {5, 3});
            CHECK(max_grad_rel_err(
                      [&](Tape& t, const std::vector<NodeId>& ids) {
                          return project_to_scalar(t, t.embed_rows(ids[0], {1, 3, 1, 0}), seed);
                      },
                      {table}) <= 1e-5);
        }
        {
            const Tensor a = random_tensor(rng, {3, 2});
            const Tensor b = random_tensor(rng, {3, 4});
            CHECK(max_grad_rel_err(
                      [&](Tape& t, const std::vector<NodeId>& ids) {
                          return project_to_scalar(t, t.concat_cols({ids[0], ids[1]}), seed);
                      },
                      {a, b}) <= 1e-5);
            CHECK(max_grad_rel_err(
                      [&](Tape& t, const std::vector<NodeId>& ids) {
                          return project_to_scalar(t, t.slice_cols(ids[1], 1, 2), seed);
                      },
                      {a, b}) <= 1e-5);
        }
        {
            const Tensor logits = random_tensor(rng, {4, 6}, -2.0, 2.0);
            CHECK(max_grad_rel_err(
                      [&](Tape& t, const std::vector<NodeId>& ids) {
                          return t.cross_entropy_logits(ids[0], {0, 5, 2, 2});
                      },
                      {logits}) <= 1e-5);
        }
        {
            // Fourier attention: |q - k| stays below pi/R so no pair can sit
            // near a sinc zero and spoil the finite-difference oracle.
            const Tensor q = random_tensor(rng, {4, 3});
            const Tensor k = random_tensor(rng, {4, 3});
            const Tensor v = random_tensor(rng, {4, 2});
            FourierAttentionOptions opt;
            opt.kernel = PhiKernel::make(4);
            const Tensor r_scalar = Tensor::vector({1.0});
            CHECK(max_grad_rel_err(
                      [&](Tape& t, const std::vector<NodeId>& ids) {
                          return project_to_scalar(
                              t, t.fourier_attention(ids[0], ids[1], ids[2], ids[3], opt), seed);
                      },
                      {q, k, v, r_scalar}) <= 1e-5);
            opt.mask = MaskMode::causal;
            const Tensor r_vec = random_tensor(rng, {3}, 0.5, 1.2);
            CHECK(max_grad_rel_err(
                      [&](Tape& t, const std::vector<NodeId>& ids) {
                          return project_to_scalar(
                              t, t.fourier_attention(ids[0], ids[1], ids[2], ids[3], opt), seed);
                      },
                      {q, k, v, r_vec}) <= 1e-5);
        }
    }
}

TEST_CASE("grad_check harness examples") {
    // f = x^2 at x = 3.
    const auto square = [](const Tensor& x) { return x[0] * x[0]; };
    const GradCheckReport r1 =
        grad_check(square, Tensor::scalar(3.0), Tensor::scalar(6.0), 1e-4);
    CHECK(r1.max_rel_err <= 1e-7);
    CHECK(r1.analytic == 6.0);

    // Constant function: both sides exactly zero.
    const auto constant = [](const Tensor&) { return 2.5; };
    const GradCheckReport r2 =
        grad_check(constant, Tensor::scalar(1.0), Tensor::scalar(0.0), 1e-4);
    CHECK(r2.max_rel_err == 0.0);

    CHECK_THROWS_AS(grad_check(square, Tensor::scalar(1.0), Tensor::scalar(0.0), 0.0),
                    ParameterError);
    const auto bad = [](const Tensor& x) { return std::log(x[0]); };
    CHECK_THROWS_AS(grad_check(bad, Tensor::scalar(0.0), Tensor::scalar(0.0), 1e-4),
                    EvaluationError);
}

TEST_CASE("fourier attention output component against finite differences") {
    Rng rng(99);
    const Tensor q = random_tensor(rng, {5, 4});
    const Tensor k = random_tensor(rng, {5, 4});
    const Tensor v = random_tensor(rng, {5, 3});
    const Tensor r = Tensor::vector({0.9});
    FourierAttentionOptions opt;
    opt.kernel = PhiKernel::make(4);

    // Scalarize by selecting one output component.
    Tensor pick = Tensor::zeros({5, 3});
    pick.at(2, 1) = 1.0;
    const double rel = max_grad_rel_err(
        [&](Tape& t, const std::vector<NodeId>& ids) {
            const NodeId out = t.fourier_attention(ids[0], ids[1], ids[2], ids[3], opt);
            return t.sum(t.mul(out, t.leaf(pick, false)));
        },
        {q, k, v, r});
    CHECK(rel <= 1e-4);
}
