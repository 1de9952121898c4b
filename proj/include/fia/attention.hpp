#pragma once

#include <vector>

#include "fia/attention_types.hpp"
#include "fia/tensor.hpp"

namespace fia {

// Scaled dot-product attention: softmax(Q K^T / sqrt(D), masked entries at
// -inf) V. Every output row is a convex combination of unmasked value rows.
Tensor dot_product_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                             MaskMode mask = MaskMode::none);

struct FourierAttentionResult {
    Tensor output;               // N x Dv
    Tensor weights;              // N x N normalized weights (0 where masked)
    std::vector<bool> fallback_rows;
    long fallback_count = 0;
    bool negative_weight_seen = false; // signed path diagnostics (odd exponents)
};

// Attention weighted by the sinc-product kernel: w_ij = prod_d
// phi(sinc(R_d (q_id - k_jd))), normalized over unmasked keys. Even
// exponents run in the log domain (softmax over log-weights, so the
// normalization constant and R^D cancel exactly); odd exponents run the
// signed diagnostic path.
FourierAttentionResult fourier_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                                         const FourierAttentionParams& params);

struct FourierAttentionGrads {
    Tensor dq;
    Tensor dk;
    Tensor dv;
    std::vector<double> dr; // length 1 (scalar R) or D (per-dim R)
};

// Fused reverse pass: one sweep over (i, j) pairs accumulates the Q, K, V
// and R gradients of the normalized weighted average. Requires the saved
// forward result. Rows that fell back to the uniform average propagate only
// into V.
FourierAttentionGrads fourier_attention_backward(const Tensor& upstream, const Tensor& q,
                                                 const Tensor& k, const Tensor& v,
                                                 const FourierAttentionParams& params,
                                                 const FourierAttentionResult& saved);

enum class AttentionVariant { dot, fourier };

struct MultiHeadParams {
    std::size_t heads = 1;
    std::vector<Tensor> w_q; // per head, D x Dx
    std::vector<Tensor> w_k; // per head, D x Dx
    std::vector<Tensor> w_v; // per head, Dv x Dx
    Tensor w_o;              // (H * Dv) x (H * Dv)
    std::vector<FourierAttentionParams> fourier; // per head
    MaskMode mask = MaskMode::none;
};

// Projects the input into per-head queries/keys/values, runs the selected
// attention per head, concatenates and applies the output projection.
Tensor multi_head(const Tensor& x, const MultiHeadParams& params, AttentionVariant variant);

} // namespace fia
