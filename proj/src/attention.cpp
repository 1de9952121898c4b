#include "fia/attention.hpp"

#include <cmath>
#include <limits>

#include "fia/linalg.hpp"

namespace fia {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_attention_shapes(const Tensor& q, const Tensor& k, const Tensor& v) {
    if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2)
        throw DimensionError("attention: Q, K, V must be matrices");
    if (q.cols() != k.cols())
        throw DimensionError("attention: query/key dimension mismatch");
    if (k.rows() != v.rows())
        throw DimensionError("attention: key/value row count mismatch");
}

bool masked_pair(MaskMode mask, std::size_t i, std::size_t j) {
    return mask == MaskMode::causal && j > i;
}

} // namespace

Tensor dot_product_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                             MaskMode mask) {
    check_attention_shapes(q, k, v);
    if (mask == MaskMode::causal && q.rows() != k.rows())
        throw DimensionError("attention: causal mask needs square scores");
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(q.cols()));
    Tensor scores = matmul_t(q, k, false, true);
    for (std::size_t i = 0; i < scores.rows(); ++i)
        for (std::size_t j = 0; j < scores.cols(); ++j)
            scores.at(i, j) = masked_pair(mask, i, j) ? kNegInf
                                                      : scores.at(i, j) * inv_sqrt_d;
    return matmul(softmax_rows(scores), v);
}

FourierAttentionResult fourier_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                                         const FourierAttentionParams& params) {
    check_attention_shapes(q, k, v);
    const std::size_t n = q.rows(), m = k.rows(), dv = v.cols();
    if (params.options.mask == MaskMode::causal && n != m)
        throw DimensionError("attention: causal mask needs square scores");

    FourierAttentionResult res;
    res.output = Tensor({n, dv});
    res.weights = Tensor({n, m});
    res.fallback_rows.assign(n, false);

    const bool signed_path = !params.options.kernel.nonnegative || !params.options.log_domain;
    std::vector<double> roww(m);

    for (std::size_t i = 0; i < n; ++i) {
        double denom = 0.0;
        if (signed_path) {
            for (std::size_t j = 0; j < m; ++j) {
                double w = 0.0;
                if (!masked_pair(params.options.mask, i, j)) {
                    w = fourier_weight_signed(q.row(i), k.row(j), params.r,
                                              params.options.kernel, params.options.sinc);
                    if (w < 0.0) res.negative_weight_seen = true;
                }
                roww[j] = w;
                denom += w;
            }
        } else {
            // Log domain: softmax over log-weights, so any common factor
            // (normalization constant, R^D) cancels exactly.
            double mx = kNegInf;
            for (std::size_t j = 0; j < m; ++j) {
                roww[j] = masked_pair(params.options.mask, i, j)
                              ? kNegInf
                              : fourier_log_weight(q.row(i), k.row(j), params.r,
                                                   params.options.kernel, params.options.sinc);
                if (roww[j] > mx) mx = roww[j];
            }
            if (mx > kNegInf) {
                for (std::size_t j = 0; j < m; ++j) {
                    roww[j] = roww[j] == kNegInf ? 0.0 : std::exp(roww[j] - mx);
                    denom += roww[j];
                }
            }
        }

        const bool degenerate =
            signed_path ? std::abs(denom) < 1e-300 : denom <= 0.0;
        if (degenerate) {
            if (params.options.fallback == FallbackMode::error)
                throw EmptyNeighborhoodError("fourier_attention: no weight mass for query",
                                             static_cast<long>(i));
            // Uniform average of the unmasked value rows.
            res.fallback_rows[i] = true;
            ++res.fallback_count;
            std::size_t count = 0;
            for (std::size_t j = 0; j < m; ++j)
                if (!masked_pair(params.options.mask, i, j)) ++count;
            const double w = 1.0 / static_cast<double>(count);
            for (std::size_t j = 0; j < m; ++j) {
                if (masked_pair(params.options.mask, i, j)) continue;
                res.weights.at(i, j) = w;
                for (std::size_t c = 0; c < dv; ++c)
                    res.output.at(i, c) += w * v.at(j, c);
            }
            continue;
        }

        for (std::size_t j = 0; j < m; ++j) {
            const double w = roww[j] / denom;
            res.weights.at(i, j) = w;
            if (w == 0.0) continue;
            for (std::size_t c = 0; c < dv; ++c)
                res.output.at(i, c) += w * v.at(j, c);
        }
    }
    return res;
}

FourierAttentionGrads fourier_attention_backward(const Tensor& upstream, const Tensor& q,
                                                 const Tensor& k, const Tensor& v,
                                                 const FourierAttentionParams& params,
                                                 const FourierAttentionResult& saved) {
    if (saved.weights.rank() != 2 || saved.weights.rows() != q.rows() ||
        saved.weights.cols() != k.rows() || saved.fallback_rows.size() != q.rows())
        throw ContractError("fourier_attention_backward: saved forward state missing");
    if (!upstream.same_shape(saved.output))
        throw DimensionError("fourier_attention_backward: upstream shape mismatch");

    const std::size_t n = q.rows(), m = k.rows(), d = q.cols(), dv = v.cols();
    FourierAttentionGrads g;
    g.dq = Tensor({n, d});
    g.dk = Tensor({m, d});
    g.dv = Tensor({m, dv});
    g.dr.assign(params.r.per_dim ? d : 1, 0.0);

    const int l = params.options.kernel.exponent;
    for (std::size_t i = 0; i < n; ++i) {
        const auto gi = upstream.row(i);
        const auto oi = saved.output.row(i);
        const bool fallback = saved.fallback_rows[i];
        // g . o is shared across the row's softmax Jacobian terms.
        const double gdoto = dot(gi, oi);
        for (std::size_t j = 0; j < m; ++j) {
            const double w = saved.weights.at(i, j);
            if (w == 0.0) continue;
            // Value path also covers fallback rows (uniform weights).
            for (std::size_t c = 0; c < dv; ++c) g.dv.at(j, c) += w * gi[c];
            if (fallback) continue;
            // d out_i / d logw_ij = w_ij (v_j - out_i). The same expression
            // covers the signed path: w_ij here is the (possibly negative)
            // normalized weight and slope below is the logarithmic
            // derivative of the signed factor.
            const double beta = w * (dot(gi, v.row(j)) - gdoto);
            if (beta == 0.0) continue;
            for (std::size_t c = 0; c < d; ++c) {
                const double rd = params.r.at(c);
                const double delta = q.at(i, c) - k.at(j, c);
                const double slope = log_sinc_derivative(rd * delta, params.options.sinc);
                const double dq_c = l * rd * slope;
                g.dq.at(i, c) += beta * dq_c;
                g.dk.at(j, c) -= beta * dq_c;
                const double dr_c = l * delta * slope;
                g.dr[params.r.per_dim ? c : 0] += beta * dr_c;
            }
        }
    }
    return g;
}

Tensor multi_head(const Tensor& x, const MultiHeadParams& params, AttentionVariant variant) {
    if (params.heads < 1 || params.w_q.size() != params.heads ||
        params.w_k.size() != params.heads || params.w_v.size() != params.heads)
        throw DimensionError("multi_head: inconsistent head parameters");
    if (variant == AttentionVariant::fourier && params.fourier.size() != params.heads)
        throw DimensionError("multi_head: missing per-head bandwidths");

    std::vector<Tensor> head_outputs;
    head_outputs.reserve(params.heads);
    for (std::size_t h = 0; h < params.heads; ++h) {
        Tensor q = matmul_t(x, params.w_q[h], false, true);
        Tensor k = matmul_t(x, params.w_k[h], false, true);
        Tensor v = matmul_t(x, params.w_v[h], false, true);
        if (variant == AttentionVariant::dot) {
            head_outputs.push_back(dot_product_attention(q, k, v, params.mask));
        } else {
            FourierAttentionParams p = params.fourier[h];
            p.options.mask = params.mask;
            head_outputs.push_back(fourier_attention(q, k, v, p).output);
        }
    }

    std::size_t total = 0;
    for (const auto& t : head_outputs) total += t.cols();
    Tensor concat({x.rows(), total});
    std::size_t offset = 0;
    for (const auto& t : head_outputs) {
        for (std::size_t i = 0; i < t.rows(); ++i)
            for (std::size_t j = 0; j < t.cols(); ++j) concat.at(i, offset + j) = t.at(i, j);
        offset += t.cols();
    }
    return matmul(concat, params.w_o);
}

} // namespace fia
