#include "fia/autodiff.hpp"

#include <cmath>
#include <limits>

#include "fia/attention.hpp"
#include "fia/linalg.hpp"

namespace fia {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kGeluScale = 0.79788456080286535588; // sqrt(2/pi)
constexpr double kGeluCubic = 0.044715;

Bandwidth bandwidth_from_tensor(const Tensor& r, std::size_t dim) {
    if (r.size() == 1) return Bandwidth::scalar(r[0]);
    if (r.size() == dim)
        return Bandwidth::vector(std::vector<double>(r.data().begin(), r.data().end()));
    throw DimensionError("fourier_attention: bandwidth must have 1 or D entries");
}

} // namespace

NodeId Tape::push(Node node) {
    nodes_.push_back(std::move(node));
    return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Tape::leaf(Tensor value, bool requires_grad) {
    Node n;
    n.op = OpKind::Leaf;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    return push(std::move(n));
}

NodeId Tape::matmul(NodeId a, NodeId b, bool trans_a, bool trans_b) {
    Node n;
    n.op = OpKind::MatMul;
    n.parents = {a, b};
    n.attrs = MatMulAttrs{trans_a, trans_b};
    n.value = matmul_t(nodes_[a].value, nodes_[b].value, trans_a, trans_b);
    n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
    return push(std::move(n));
}

NodeId Tape::add(NodeId a, NodeId b) {
    const Tensor& ta = nodes_[a].value;
    const Tensor& tb = nodes_[b].value;
    if (!ta.same_shape(tb)) throw DimensionError("tape add: shape mismatch");
    Node n;
    n.op = OpKind::Add;
    n.parents = {a, b};
    n.value = ta;
    for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] += tb[i];
    n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
    return push(std::move(n));
}

NodeId Tape::add_row_vector(NodeId a, NodeId bias) {
    const Tensor& ta = nodes_[a].value;
    const Tensor& tb = nodes_[bias].value;
    if (ta.rank() != 2 || tb.size() != ta.cols())
        throw DimensionError("tape add_row_vector: bias length must match columns");
    Node n;
    n.op = OpKind::AddRowVector;
    n.parents = {a, bias};
    n.value = ta;
    for (std::size_t i = 0; i < ta.rows(); ++i)
        for (std::size_t j = 0; j < ta.cols(); ++j) n.value.at(i, j) += tb[j];
    n.requires_grad = nodes_[a].requires_grad || nodes_[bias].requires_grad;
    return push(std::move(n));
}

NodeId Tape::mul(NodeId a, NodeId b) {
    const Tensor& ta = nodes_[a].value;
    const Tensor& tb = nodes_[b].value;
    if (!ta.same_shape(tb)) throw DimensionError("tape mul: shape mismatch");
    Node n;
    n.op = OpKind::Mul;
    n.parents = {a, b};
    n.value = ta;
    for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] *= tb[i];
    n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
    return push(std::move(n));
}

NodeId Tape::scale(NodeId a, double factor) {
    Node n;
    n.op = OpKind::Scale;
    n.parents = {a};
    n.attrs = ScaleAttrs{factor};
    n.value = nodes_[a].value;
    for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] *= factor;
    n.requires_grad = nodes_[a].requires_grad;
    return push(std::move(n));
}

NodeId Tape::exp_elem(NodeId a) {
    Node n;
    n.op = OpKind::Exp;
    n.parents = {a};
    n.value = nodes_[a].value;
    for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = std::exp(n.value[i]);
    n.requires_grad = nodes_[a].requires_grad;
    return push(std::move(n));
}

NodeId Tape::gelu(NodeId a) {
    Node n;
    n.op = OpKind::Gelu;
    n.parents = {a};
    n.value = nodes_[a].value;
    for (std::size_t i = 0; i < n.value.size(); ++i) {
        const double x = n.value[i];
        const double inner = kGeluScale * (x + kGeluCubic * x * x * x);
        n.value[i] = 0.5 * x * (1.0 + std::tanh(inner));
    }
    n.requires_grad = nodes_[a].requires_grad;
    return push(std::move(n));
}

NodeId Tape::layer_norm(NodeId x, NodeId gain, NodeId bias, double epsilon) {
    const Tensor& tx = nodes_[x].value;
    const Tensor& tg = nodes_[gain].value;
    const Tensor& tb = nodes_[bias].value;
    if (tx.rank() != 2 || tg.size() != tx.cols() || tb.size() != tx.cols())
        throw DimensionError("tape layer_norm: gain/bias length must match columns");
    Node n;
    n.op = OpKind::LayerNorm;
    n.parents = {x, gain, bias};
    n.attrs = LayerNormAttrs{epsilon};
    n.value = Tensor({tx.rows(), tx.cols()});
    const std::size_t c = tx.cols();
    for (std::size_t i = 0; i < tx.rows(); ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < c; ++j) mean += tx.at(i, j);
        mean /= static_cast<double>(c);
        double var = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            const double d = tx.at(i, j) - mean;
            var += d * d;
        }
        var /= static_cast<double>(c);
        const double inv_std = 1.0 / std::sqrt(var + epsilon);
        for (std::size_t j = 0; j < c; ++j)
            n.value.at(i, j) = (tx.at(i, j) - mean) * inv_std * tg[j] + tb[j];
    }
    n.requires_grad =
        nodes_[x].requires_grad || nodes_[gain].requires_grad || nodes_[bias].requires_grad;
    return push(std::move(n));
}

NodeId Tape::softmax_rows_masked(NodeId scores, MaskMode mask) {
    const Tensor& ts = nodes_[scores].value;
    if (ts.rank() != 2) throw DimensionError("tape softmax: scores must be a matrix");
    Tensor masked = ts;
    if (mask == MaskMode::causal) {
        if (ts.rows() != ts.cols())
            throw DimensionError("tape softmax: causal mask needs square scores");
        for (std::size_t i = 0; i < ts.rows(); ++i)
            for (std::size_t j = i + 1; j < ts.cols(); ++j) masked.at(i, j) = kNegInf;
    }
    Node n;
    n.op = OpKind::SoftmaxRowsMasked;
    n.parents = {scores};
    n.attrs = MaskAttrs{mask};
    n.value = softmax_rows(masked);
    n.requires_grad = nodes_[scores].requires_grad;
    return push(std::move(n));
}

NodeId Tape::embed_rows(NodeId table, std::vector<int> ids) {
    const Tensor& tt = nodes_[table].value;
    if (tt.rank() != 2) throw DimensionError("tape embed: table must be a matrix");
    Node n;
    n.op = OpKind::EmbedRows;
    n.parents = {table};
    n.value = Tensor({ids.size(), tt.cols()});
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const int id = ids[i];
        if (id < 0 || static_cast<std::size_t>(id) >= tt.rows())
            throw DimensionError("tape embed: id out of range");
        for (std::size_t j = 0; j < tt.cols(); ++j)
            n.value.at(i, j) = tt.at(static_cast<std::size_t>(id), j);
    }
    n.attrs = EmbedAttrs{std::move(ids)};
    n.requires_grad = nodes_[table].requires_grad;
    return push(std::move(n));
}

NodeId Tape::concat_cols(const std::vector<NodeId>& parts) {
    if (parts.empty()) throw DimensionError("tape concat: no parts");
    const std::size_t rows = nodes_[parts[0]].value.rows();
    std::size_t total = 0;
    ConcatAttrs attrs;
    bool needs_grad = false;
    for (NodeId id : parts) {
        const Tensor& t = nodes_[id].value;
        if (t.rows() != rows) throw DimensionError("tape concat: row mismatch");
        attrs.widths.push_back(t.cols());
        total += t.cols();
        needs_grad = needs_grad || nodes_[id].requires_grad;
    }
    Node n;
    n.op = OpKind::ConcatCols;
    n.parents = parts;
    n.value = Tensor({rows, total});
    std::size_t offset = 0;
    for (NodeId id : parts) {
        const Tensor& t = nodes_[id].value;
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < t.cols(); ++j) n.value.at(i, offset + j) = t.at(i, j);
        offset += t.cols();
    }
    n.attrs = std::move(attrs);
    n.requires_grad = needs_grad;
    return push(std::move(n));
}

NodeId Tape::slice_cols(NodeId a, std::size_t begin, std::size_t count) {
    const Tensor& ta = nodes_[a].value;
    if (ta.rank() != 2 || begin + count > ta.cols())
        throw DimensionError("tape slice: out of range");
    Node n;
    n.op = OpKind::SliceCols;
    n.parents = {a};
    n.attrs = SliceAttrs{begin, count};
    n.value = Tensor({ta.rows(), count});
    for (std::size_t i = 0; i < ta.rows(); ++i)
        for (std::size_t j = 0; j < count; ++j) n.value.at(i, j) = ta.at(i, begin + j);
    n.requires_grad = nodes_[a].requires_grad;
    return push(std::move(n));
}

NodeId Tape::sum(NodeId a) {
    Node n;
    n.op = OpKind::Sum;
    n.parents = {a};
    double acc = 0.0;
    for (double v : nodes_[a].value.data()) acc += v;
    n.value = Tensor::scalar(acc);
    n.requires_grad = nodes_[a].requires_grad;
    return push(std::move(n));
}

NodeId Tape::cross_entropy_logits(NodeId logits, std::vector<int> targets) {
    const Tensor& tl = nodes_[logits].value;
    if (tl.rank() != 2 || targets.size() != tl.rows())
        throw DimensionError("tape cross_entropy: one target per row");
    double acc = 0.0;
    for (std::size_t i = 0; i < tl.rows(); ++i) {
        const int t = targets[i];
        if (t < 0 || static_cast<std::size_t>(t) >= tl.cols())
            throw DimensionError("tape cross_entropy: target out of range");
        acc += log_sum_exp(tl.row(i)) - tl.at(i, static_cast<std::size_t>(t));
    }
    Node n;
    n.op = OpKind::CrossEntropyLogits;
    n.parents = {logits};
    n.attrs = CrossEntropyAttrs{std::move(targets)};
    n.value = Tensor::scalar(acc / static_cast<double>(tl.rows()));
    n.requires_grad = nodes_[logits].requires_grad;
    return push(std::move(n));
}

NodeId Tape::fourier_attention(NodeId q, NodeId k, NodeId v, NodeId r,
                               const FourierAttentionOptions& options) {
    const Tensor& tq = nodes_[q].value;
    FourierAttentionParams params;
    params.r = bandwidth_from_tensor(nodes_[r].value, tq.cols());
    params.options = options;
    FourierAttentionResult res =
        ::fia::fourier_attention(tq, nodes_[k].value, nodes_[v].value, params);
    fourier_fallback_count_ += res.fallback_count;
    fourier_negative_weight_ = fourier_negative_weight_ || res.negative_weight_seen;
    Node n;
    n.op = OpKind::FourierAttention;
    n.parents = {q, k, v, r};
    n.value = std::move(res.output);
    FourierAttnAttrs attrs;
    attrs.options = options;
    attrs.weights = std::move(res.weights);
    attrs.fallback_rows = std::move(res.fallback_rows);
    n.attrs = std::move(attrs);
    n.requires_grad = nodes_[q].requires_grad || nodes_[k].requires_grad ||
                      nodes_[v].requires_grad || nodes_[r].requires_grad;
    return push(std::move(n));
}

std::vector<Tensor> Tape::backward(NodeId loss) const {
    const Node& root = nodes_.at(loss);
    if (root.value.size() != 1)
        throw ContractError("tape backward: loss must be scalar");

    std::vector<Tensor> adj(nodes_.size());
    adj[loss] = Tensor::scalar(1.0);

    auto accum = [&](NodeId id, std::size_t flat_index, double g) {
        if (!nodes_[id].requires_grad) return;
        if (adj[id].size() == 0) adj[id] = Tensor::zeros(nodes_[id].value.shape());
        adj[id][flat_index] += g;
    };
    auto accum_all = [&](NodeId id, const Tensor& g) {
        if (!nodes_[id].requires_grad) return;
        if (adj[id].size() == 0) adj[id] = Tensor::zeros(nodes_[id].value.shape());
        for (std::size_t i = 0; i < g.size(); ++i) adj[id][i] += g[i];
    };

    for (NodeId id = loss; id >= 0; --id) {
        const Node& n = nodes_[id];
        if (!n.requires_grad || adj[id].size() == 0) continue;
        const Tensor& g = adj[id];
        switch (n.op) {
            case OpKind::Leaf:
                break;
            case OpKind::MatMul: {
                const auto& at = std::get<MatMulAttrs>(n.attrs);
                const Tensor& a = nodes_[n.parents[0]].value;
                const Tensor& b = nodes_[n.parents[1]].value;
                if (nodes_[n.parents[0]].requires_grad) {
                    // d(opA) = G * opB^T, transposed back if A was transposed.
                    Tensor da = at.trans_a ? matmul_t(b, g, at.trans_b, true)
                                           : matmul_t(g, b, false, !at.trans_b);
                    accum_all(n.parents[0], da);
                }
                if (nodes_[n.parents[1]].requires_grad) {
                    Tensor db = at.trans_b ? matmul_t(g, a, true, at.trans_a)
                                           : matmul_t(a, g, !at.trans_a, false);
                    accum_all(n.parents[1], db);
                }
                break;
            }
            case OpKind::Add:
                accum_all(n.parents[0], g);
                accum_all(n.parents[1], g);
                break;
            case OpKind::AddRowVector: {
                accum_all(n.parents[0], g);
                if (nodes_[n.parents[1]].requires_grad) {
                    const std::size_t c = n.value.cols();
                    for (std::size_t i = 0; i < n.value.rows(); ++i)
                        for (std::size_t j = 0; j < c; ++j)
                            accum(n.parents[1], j, g.at(i, j));
                }
                break;
            }
            case OpKind::Mul: {
                const Tensor& a = nodes_[n.parents[0]].value;
                const Tensor& b = nodes_[n.parents[1]].value;
                for (std::size_t i = 0; i < g.size(); ++i) {
                    accum(n.parents[0], i, g[i] * b[i]);
                    accum(n.parents[1], i, g[i] * a[i]);
                }
                break;
            }
            case OpKind::Scale: {
                const double f = std::get<ScaleAttrs>(n.attrs).factor;
                for (std::size_t i = 0; i < g.size(); ++i)
                    accum(n.parents[0], i, g[i] * f);
                break;
            }
            case OpKind::Exp:
                for (std::size_t i = 0; i < g.size(); ++i)
                    accum(n.parents[0], i, g[i] * n.value[i]);
                break;
            case OpKind::Gelu: {
                const Tensor& x = nodes_[n.parents[0]].value;
                for (std::size_t i = 0; i < g.size(); ++i) {
                    const double xi = x[i];
                    const double inner = kGeluScale * (xi + kGeluCubic * xi * xi * xi);
                    const double t = std::tanh(inner);
                    const double dinner = kGeluScale * (1.0 + 3.0 * kGeluCubic * xi * xi);
                    const double d = 0.5 * (1.0 + t) + 0.5 * xi * (1.0 - t * t) * dinner;
                    accum(n.parents[0], i, g[i] * d);
                }
                break;
            }
            case OpKind::LayerNorm: {
                const double eps = std::get<LayerNormAttrs>(n.attrs).epsilon;
                const Tensor& x = nodes_[n.parents[0]].value;
                const Tensor& gain = nodes_[n.parents[1]].value;
                const std::size_t c = x.cols();
                for (std::size_t i = 0; i < x.rows(); ++i) {
                    double mean = 0.0;
                    for (std::size_t j = 0; j < c; ++j) mean += x.at(i, j);
                    mean /= static_cast<double>(c);
                    double var = 0.0;
                    for (std::size_t j = 0; j < c; ++j) {
                        const double d = x.at(i, j) - mean;
                        var += d * d;
                    }
                    var /= static_cast<double>(c);
                    const double inv_std = 1.0 / std::sqrt(var + eps);
                    double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
                    for (std::size_t j = 0; j < c; ++j) {
                        const double xhat = (x.at(i, j) - mean) * inv_std;
                        const double dxhat = g.at(i, j) * gain[j];
                        sum_dxhat += dxhat;
                        sum_dxhat_xhat += dxhat * xhat;
                        if (nodes_[n.parents[1]].requires_grad)
                            accum(n.parents[1], j, g.at(i, j) * xhat);
                        if (nodes_[n.parents[2]].requires_grad)
                            accum(n.parents[2], j, g.at(i, j));
                    }
                    if (nodes_[n.parents[0]].requires_grad) {
                        const double inv_c = 1.0 / static_cast<double>(c);
                        for (std::size_t j = 0; j < c; ++j) {
                            const double xhat = (x.at(i, j) - mean) * inv_std;
                            const double dxhat = g.at(i, j) * gain[j];
                            const double dx = inv_std * (dxhat - inv_c * sum_dxhat -
                                                         xhat * inv_c * sum_dxhat_xhat);
                            accum(n.parents[0], i * c + j, dx);
                        }
                    }
                }
                break;
            }
            case OpKind::SoftmaxRowsMasked: {
                const MaskMode mask = std::get<MaskAttrs>(n.attrs).mask;
                const Tensor& p = n.value;
                const std::size_t c = p.cols();
                for (std::size_t i = 0; i < p.rows(); ++i) {
                    double gdotp = 0.0;
                    for (std::size_t j = 0; j < c; ++j) gdotp += g.at(i, j) * p.at(i, j);
                    for (std::size_t j = 0; j < c; ++j) {
                        if (mask == MaskMode::causal && j > i) continue;
                        accum(n.parents[0], i * c + j,
                              p.at(i, j) * (g.at(i, j) - gdotp));
                    }
                }
                break;
            }
            case OpKind::EmbedRows: {
                const auto& ids = std::get<EmbedAttrs>(n.attrs).ids;
                const std::size_t c = n.value.cols();
                for (std::size_t i = 0; i < ids.size(); ++i)
                    for (std::size_t j = 0; j < c; ++j)
                        accum(n.parents[0], static_cast<std::size_t>(ids[i]) * c + j,
                              g.at(i, j));
                break;
            }
            case OpKind::ConcatCols: {
                const auto& widths = std::get<ConcatAttrs>(n.attrs).widths;
                std::size_t offset = 0;
                for (std::size_t p = 0; p < n.parents.size(); ++p) {
                    const std::size_t w = widths[p];
                    if (nodes_[n.parents[p]].requires_grad)
                        for (std::size_t i = 0; i < n.value.rows(); ++i)
                            for (std::size_t j = 0; j < w; ++j)
                                accum(n.parents[p], i * w + j, g.at(i, offset + j));
                    offset += w;
                }
                break;
            }
            case OpKind::SliceCols: {
                const auto& at = std::get<SliceAttrs>(n.attrs);
                const std::size_t pc = nodes_[n.parents[0]].value.cols();
                for (std::size_t i = 0; i < n.value.rows(); ++i)
                    for (std::size_t j = 0; j < at.count; ++j)
                        accum(n.parents[0], i * pc + at.begin + j, g.at(i, j));
                break;
            }
            case OpKind::Sum:
                for (std::size_t i = 0; i < nodes_[n.parents[0]].value.size(); ++i)
                    accum(n.parents[0], i, g[0]);
                break;
            case OpKind::CrossEntropyLogits: {
                const auto& targets = std::get<CrossEntropyAttrs>(n.attrs).targets;
                const Tensor& logits = nodes_[n.parents[0]].value;
                const double inv_rows = 1.0 / static_cast<double>(logits.rows());
                for (std::size_t i = 0; i < logits.rows(); ++i) {
                    const double lse = log_sum_exp(logits.row(i));
                    for (std::size_t j = 0; j < logits.cols(); ++j) {
                        const double p = std::exp(logits.at(i, j) - lse);
                        const double indicator =
                            j == static_cast<std::size_t>(targets[i]) ? 1.0 : 0.0;
                        accum(n.parents[0], i * logits.cols() + j,
                              g[0] * inv_rows * (p - indicator));
                    }
                }
                break;
            }
            case OpKind::FourierAttention: {
                const auto& at = std::get<FourierAttnAttrs>(n.attrs);
                const Tensor& q = nodes_[n.parents[0]].value;
                const Tensor& k = nodes_[n.parents[1]].value;
                const Tensor& v = nodes_[n.parents[2]].value;
                const Tensor& r = nodes_[n.parents[3]].value;
                FourierAttentionParams params;
                params.r = bandwidth_from_tensor(r, q.cols());
                params.options = at.options;
                FourierAttentionResult saved;
                saved.output = n.value;
                saved.weights = at.weights;
                saved.fallback_rows = at.fallback_rows;
                FourierAttentionGrads grads =
                    fourier_attention_backward(g, q, k, v, params, saved);
                accum_all(n.parents[0], grads.dq);
                accum_all(n.parents[1], grads.dk);
                accum_all(n.parents[2], grads.dv);
                if (nodes_[n.parents[3]].requires_grad)
                    for (std::size_t i = 0; i < grads.dr.size(); ++i)
                        accum(n.parents[3], i, grads.dr[i]);
                break;
            }
        }
    }
    return adj;
}

} // namespace fia
