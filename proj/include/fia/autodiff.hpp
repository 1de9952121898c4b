#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "fia/attention_types.hpp"
#include "fia/tensor.hpp"

namespace fia {

// Reverse-mode tape over the small op set the attention stack and the toy
// transformer need. The tape is append-only: parents always precede
// children, and backward() walks node ids in strictly decreasing order, so a
// replay of the same tape yields bit-identical adjoints.

using NodeId = std::int32_t;

enum class OpKind {
    Leaf,
    MatMul,
    Add,
    AddRowVector,
    Mul,
    Scale,
    Exp,
    Gelu,
    LayerNorm,
    SoftmaxRowsMasked,
    EmbedRows,
    ConcatCols,
    SliceCols,
    Sum,
    CrossEntropyLogits,
    FourierAttention,
};

struct MatMulAttrs {
    bool trans_a = false;
    bool trans_b = false;
};
struct ScaleAttrs {
    double factor = 1.0;
};
struct LayerNormAttrs {
    double epsilon = 1e-5;
};
struct MaskAttrs {
    MaskMode mask = MaskMode::none;
};
struct EmbedAttrs {
    std::vector<int> ids;
};
struct SliceAttrs {
    std::size_t begin = 0;
    std::size_t count = 0;
};
struct ConcatAttrs {
    std::vector<std::size_t> widths;
};
struct CrossEntropyAttrs {
    std::vector<int> targets;
};
struct FourierAttnAttrs {
    FourierAttentionOptions options;
    // Saved forward state: normalized weights and rows that fell back to the
    // uniform average (their Q/K/R gradient is zero).
    Tensor weights;
    std::vector<bool> fallback_rows;
};

using NodeAttrs = std::variant<std::monostate, MatMulAttrs, ScaleAttrs, LayerNormAttrs,
                               MaskAttrs, EmbedAttrs, SliceAttrs, ConcatAttrs,
                               CrossEntropyAttrs, FourierAttnAttrs>;

struct Node {
    OpKind op = OpKind::Leaf;
    std::vector<NodeId> parents;
    Tensor value;
    bool requires_grad = true;
    NodeAttrs attrs;
};

class Tape {
  public:
    NodeId leaf(Tensor value, bool requires_grad = true);

    NodeId matmul(NodeId a, NodeId b, bool trans_a = false, bool trans_b = false);
    NodeId add(NodeId a, NodeId b);
    // Adds a length-C row vector to every row of an M x C matrix.
    NodeId add_row_vector(NodeId a, NodeId bias);
    NodeId mul(NodeId a, NodeId b);
    NodeId scale(NodeId a, double factor);
    NodeId exp_elem(NodeId a);
    NodeId gelu(NodeId a);
    // Row-wise normalization over the last axis with learnable gain/bias.
    NodeId layer_norm(NodeId x, NodeId gain, NodeId bias, double epsilon = 1e-5);
    NodeId softmax_rows_masked(NodeId scores, MaskMode mask);
    // Gathers rows of `table` by id (byte embedding lookup).
    NodeId embed_rows(NodeId table, std::vector<int> ids);
    NodeId concat_cols(const std::vector<NodeId>& parts);
    NodeId slice_cols(NodeId a, std::size_t begin, std::size_t count);
    NodeId sum(NodeId a);
    // Mean over rows of (logsumexp(row) - row[target]); scalar output.
    NodeId cross_entropy_logits(NodeId logits, std::vector<int> targets);
    // q, k, v as usual; r holds the bandwidth (length 1 = scalar, length D =
    // per-dimension). Uses the fused analytic backward from the kernels
    // module rather than decomposing into primitive sinc/log ops.
    NodeId fourier_attention(NodeId q, NodeId k, NodeId v, NodeId r,
                             const FourierAttentionOptions& options);

    const Tensor& value(NodeId id) const { return nodes_.at(id).value; }
    std::size_t size() const { return nodes_.size(); }
    const Node& node(NodeId id) const { return nodes_.at(id); }

    // Diagnostics accumulated across fourier_attention ops on this tape.
    long fourier_fallback_count() const { return fourier_fallback_count_; }
    bool fourier_negative_weight_seen() const { return fourier_negative_weight_; }

    // Reverse pass from a scalar loss; returns one adjoint per node (empty
    // tensor where no gradient flows). ContractError if loss is not scalar.
    std::vector<Tensor> backward(NodeId loss) const;

  private:
    NodeId push(Node node);
    std::vector<Node> nodes_;
    long fourier_fallback_count_ = 0;
    bool fourier_negative_weight_ = false;
};

} // namespace fia
