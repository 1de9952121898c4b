#include "fia/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fia/corpus.hpp"
#include "fia/linalg.hpp"
#include "fia/rng.hpp"
#include "fia/serialize.hpp"

namespace fia {

namespace {

Tensor sinusoidal_positions(std::size_t context, std::size_t d_model) {
    Tensor pos({context, d_model});
    for (std::size_t t = 0; t < context; ++t) {
        for (std::size_t i = 0; i < d_model; i += 2) {
            const double rate = std::pow(10000.0, -static_cast<double>(i) / d_model);
            pos.at(t, i) = std::sin(t * rate);
            if (i + 1 < d_model) pos.at(t, i + 1) = std::cos(t * rate);
        }
    }
    return pos;
}

Tensor uniform_init(Rng& rng, std::vector<std::size_t> shape, double bound) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
    return t;
}

} // namespace

TransformerModel::TransformerModel(const TransformerConfig& config) : config_(config) {
    if (config.d_model == 0 || config.heads == 0 || config.d_model % config.heads != 0)
        throw ConfigError("transformer: d_model must be divisible by heads");
    if (config.context_len < 2) throw ConfigError("transformer: context_len must be >= 2");
    if (config.vocab < 2) throw ConfigError("transformer: vocab must be >= 2");
    if (config.variant == AttentionVariant::fourier && !(config.r_init > 0.0))
        throw ConfigError("transformer: r_init must be positive");

    const std::size_t d = config.d_model;
    const std::size_t dh = d / config.heads;
    const std::size_t dff = config.d_ff;
    Rng rng = Rng(config.seed).substream(0x1417);

    const double a_model = std::sqrt(1.0 / static_cast<double>(d));
    const double a_ff = std::sqrt(1.0 / static_cast<double>(dff));

    auto name = [](const std::string& base, std::size_t i, const std::string& tail) {
        return base + std::to_string(i) + tail;
    };

    params_.emplace_back("embed", uniform_init(rng, {config.vocab, d}, a_model));
    for (std::size_t l = 0; l < config.layers; ++l) {
        params_.emplace_back(name("L", l, ".ln1.gain"), Tensor::full({d}, 1.0));
        params_.emplace_back(name("L", l, ".ln1.bias"), Tensor::zeros({d}));
        for (std::size_t h = 0; h < config.heads; ++h) {
            const std::string hp = name("L", l, ".h") + std::to_string(h);
            params_.emplace_back(hp + ".wq", uniform_init(rng, {dh, d}, a_model));
            params_.emplace_back(hp + ".wk", uniform_init(rng, {dh, d}, a_model));
            params_.emplace_back(hp + ".wv", uniform_init(rng, {dh, d}, a_model));
            if (config.variant == AttentionVariant::fourier) {
                // R stays positive via R = exp(rho); rho = ln(R_init) leaves
                // the initial value untouched.
                const std::size_t rdim = config.r_per_dim ? dh : 1;
                params_.emplace_back(hp + ".rho",
                                     Tensor::full({rdim}, std::log(config.r_init)));
            }
        }
        params_.emplace_back(name("L", l, ".wo"), uniform_init(rng, {d, d}, a_model));
        params_.emplace_back(name("L", l, ".ln2.gain"), Tensor::full({d}, 1.0));
        params_.emplace_back(name("L", l, ".ln2.bias"), Tensor::zeros({d}));
        params_.emplace_back(name("L", l, ".ff1.w"), uniform_init(rng, {dff, d}, a_model));
        params_.emplace_back(name("L", l, ".ff1.b"), Tensor::zeros({dff}));
        params_.emplace_back(name("L", l, ".ff2.w"), uniform_init(rng, {d, dff}, a_ff));
        params_.emplace_back(name("L", l, ".ff2.b"), Tensor::zeros({d}));
    }
    params_.emplace_back("final_ln.gain", Tensor::full({d}, 1.0));
    params_.emplace_back("final_ln.bias", Tensor::zeros({d}));
    // Output projection at half scale so the fresh model predicts close to
    // the uniform distribution over bytes.
    params_.emplace_back("out.w", uniform_init(rng, {config.vocab, d}, 0.5 * a_model));
    params_.emplace_back("out.b", Tensor::zeros({config.vocab}));

    positional_ = sinusoidal_positions(config.context_len, d);
}

std::size_t TransformerModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& [_, t] : params_) n += t.size();
    return n;
}

std::size_t TransformerModel::expected_parameter_count(const TransformerConfig& c) {
    const std::size_t d = c.d_model, dff = c.d_ff, v = c.vocab;
    std::size_t per_layer = 4 * d + 4 * d * d + 2 * d * dff + dff + d;
    if (c.variant == AttentionVariant::fourier)
        per_layer += c.heads * (c.r_per_dim ? d / c.heads : 1);
    return v * d + c.layers * per_layer + 2 * d + v * d + v;
}

// Assembles the forward graph for one sequence; shared by the trainer, the
// evaluators and the head-distance probe.
struct ModelGraphBuilder {
    const TransformerModel& model;
    Tape& tape;
    const std::vector<NodeId>& param_nodes;
    std::vector<std::vector<NodeId>> head_nodes; // per layer, per head

    NodeId param(const std::string& name) const {
        const auto& params = model.parameters();
        for (std::size_t i = 0; i < params.size(); ++i)
            if (params[i].first == name) return param_nodes[i];
        throw ContractError("model graph: unknown parameter " + name);
    }

    NodeId logits(const std::vector<unsigned char>& inputs, bool collect_heads = false) {
        const TransformerConfig& cfg = model.config_;
        const std::size_t t_len = inputs.size();
        if (t_len < 1 || t_len > cfg.context_len)
            throw DataError("model graph: sequence length out of range");

        std::vector<int> ids(inputs.begin(), inputs.end());
        Tensor pos({t_len, cfg.d_model});
        for (std::size_t t = 0; t < t_len; ++t)
            for (std::size_t j = 0; j < cfg.d_model; ++j)
                pos.at(t, j) = model.positional_.at(t, j);

        NodeId x = tape.add(tape.embed_rows(param("embed"), ids),
                            tape.leaf(std::move(pos), false));

        for (std::size_t l = 0; l < cfg.layers; ++l) {
            const std::string lp = "L" + std::to_string(l);
            NodeId normed = tape.layer_norm(x, param(lp + ".ln1.gain"), param(lp + ".ln1.bias"));
            std::vector<NodeId> heads;
            if (collect_heads && head_nodes.size() <= l) head_nodes.emplace_back();
            for (std::size_t h = 0; h < cfg.heads; ++h) {
                const std::string hp = lp + ".h" + std::to_string(h);
                NodeId q = tape.matmul(normed, param(hp + ".wq"), false, true);
                NodeId k = tape.matmul(normed, param(hp + ".wk"), false, true);
                NodeId v = tape.matmul(normed, param(hp + ".wv"), false, true);
                NodeId head;
                if (cfg.variant == AttentionVariant::dot) {
                    const double inv_sqrt =
                        1.0 / std::sqrt(static_cast<double>(cfg.d_model / cfg.heads));
                    NodeId scores = tape.scale(tape.matmul(q, k, false, true), inv_sqrt);
                    NodeId probs = tape.softmax_rows_masked(scores, MaskMode::causal);
                    head = tape.matmul(probs, v);
                } else {
                    FourierAttentionOptions opt;
                    opt.kernel = PhiKernel::make(cfg.phi_exponent);
                    opt.mask = MaskMode::causal;
                    opt.fallback = FallbackMode::uniform;
                    opt.log_domain = opt.kernel.nonnegative;
                    NodeId r = tape.exp_elem(param(hp + ".rho"));
                    head = tape.fourier_attention(q, k, v, r, opt);
                }
                heads.push_back(head);
                if (collect_heads) head_nodes[l].push_back(head);
            }
            NodeId concat = heads.size() == 1 ? heads[0] : tape.concat_cols(heads);
            x = tape.add(x, tape.matmul(concat, param(lp + ".wo")));

            NodeId ff = tape.layer_norm(x, param(lp + ".ln2.gain"), param(lp + ".ln2.bias"));
            ff = tape.add_row_vector(tape.matmul(ff, param(lp + ".ff1.w"), false, true),
                                     param(lp + ".ff1.b"));
            ff = tape.gelu(ff);
            ff = tape.add_row_vector(tape.matmul(ff, param(lp + ".ff2.w"), false, true),
                                     param(lp + ".ff2.b"));
            x = tape.add(x, ff);
        }

        x = tape.layer_norm(x, param("final_ln.gain"), param("final_ln.bias"));
        return tape.add_row_vector(tape.matmul(x, param("out.w"), false, true),
                                   param("out.b"));
    }
};

TransformerModel::TapeLoss TransformerModel::batch_loss(
    const std::vector<std::vector<unsigned char>>& batch) const {
    if (batch.empty()) throw DataError("batch_loss: empty batch");
    TapeLoss out;
    out.param_nodes.reserve(params_.size());
    for (const auto& [_, t] : params_) out.param_nodes.push_back(out.tape.leaf(t));

    ModelGraphBuilder builder{*this, out.tape, out.param_nodes, {}};
    NodeId total = -1;
    for (const auto& bytes : batch) {
        if (bytes.size() < 2) throw DataError("batch_loss: sequence needs >= 2 bytes");
        std::vector<unsigned char> inputs(bytes.begin(), bytes.end() - 1);
        std::vector<int> targets(bytes.begin() + 1, bytes.end());
        NodeId logits = builder.logits(inputs);
        NodeId loss = out.tape.cross_entropy_logits(logits, std::move(targets));
        total = total < 0 ? loss : out.tape.add(total, loss);
    }
    out.loss = batch.size() == 1 ? total
                                 : out.tape.scale(total, 1.0 / static_cast<double>(batch.size()));
    out.fallback_count = out.tape.fourier_fallback_count();
    out.negative_weight_seen = out.tape.fourier_negative_weight_seen();
    return out;
}

double TransformerModel::sequence_loss(const std::vector<unsigned char>& bytes) const {
    TapeLoss tl = batch_loss({bytes});
    return tl.tape.value(tl.loss)[0];
}

std::vector<std::vector<Tensor>> TransformerModel::head_outputs(
    const std::vector<unsigned char>& bytes) const {
    Tape tape;
    std::vector<NodeId> param_nodes;
    param_nodes.reserve(params_.size());
    for (const auto& [_, t] : params_) param_nodes.push_back(tape.leaf(t, false));
    ModelGraphBuilder builder{*this, tape, param_nodes, {}};
    builder.logits(bytes, true);
    std::vector<std::vector<Tensor>> out;
    for (const auto& layer : builder.head_nodes) {
        out.emplace_back();
        for (NodeId id : layer) out.back().push_back(tape.value(id));
    }
    return out;
}

void TransformerModel::save_checkpoint(const std::string& path) const {
    std::vector<std::pair<std::string, Tensor>> entries;
    const TransformerConfig& c = config_;
    entries.emplace_back(
        "__config__",
        Tensor::vector({static_cast<double>(c.layers), static_cast<double>(c.d_model),
                        static_cast<double>(c.heads), static_cast<double>(c.d_ff),
                        static_cast<double>(c.context_len), static_cast<double>(c.vocab),
                        c.variant == AttentionVariant::fourier ? 1.0 : 0.0,
                        static_cast<double>(c.phi_exponent), c.r_init,
                        c.r_per_dim ? 1.0 : 0.0, static_cast<double>(c.seed & 0xffffffffu),
                        static_cast<double>(c.seed >> 32)}));
    for (const auto& e : params_) entries.push_back(e);
    save_tensor_archive(path, entries);
}

void TransformerModel::load_checkpoint(const std::string& path) {
    auto entries = load_tensor_archive(path);
    if (entries.empty() || entries[0].first != "__config__")
        throw IoError("checkpoint: missing config entry");
    const Tensor& cfg = entries[0].second;
    TransformerConfig c;
    c.layers = static_cast<std::size_t>(cfg[0]);
    c.d_model = static_cast<std::size_t>(cfg[1]);
    c.heads = static_cast<std::size_t>(cfg[2]);
    c.d_ff = static_cast<std::size_t>(cfg[3]);
    c.context_len = static_cast<std::size_t>(cfg[4]);
    c.vocab = static_cast<std::size_t>(cfg[5]);
    c.variant = cfg[6] != 0.0 ? AttentionVariant::fourier : AttentionVariant::dot;
    c.phi_exponent = static_cast<int>(cfg[7]);
    c.r_init = cfg[8];
    c.r_per_dim = cfg[9] != 0.0;
    c.seed = static_cast<std::uint64_t>(cfg[10]) |
             (static_cast<std::uint64_t>(cfg[11]) << 32);
    *this = TransformerModel(c);
    if (entries.size() - 1 != params_.size())
        throw IoError("checkpoint: parameter count mismatch");
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (entries[i + 1].first != params_[i].first ||
            !entries[i + 1].second.same_shape(params_[i].second))
            throw IoError("checkpoint: parameter mismatch at " + params_[i].first);
        params_[i].second = std::move(entries[i + 1].second);
    }
}

namespace {

struct AdamState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    std::size_t t = 0;
};

std::vector<double> current_r_values(const TransformerModel& model) {
    std::vector<double> out;
    for (const auto& [name, tensor] : model.parameters())
        if (name.size() > 4 && name.substr(name.size() - 4) == ".rho")
            for (double rho : tensor.data()) out.push_back(std::exp(rho));
    return out;
}

struct EvalWindows {
    std::vector<std::vector<unsigned char>> windows;
};

EvalWindows make_eval_windows(const std::string& corpus, std::size_t valid_begin,
                              std::size_t window_bytes, std::size_t max_windows) {
    EvalWindows ev;
    std::size_t pos = valid_begin;
    while (pos + 2 <= corpus.size() && ev.windows.size() < max_windows) {
        const std::size_t len = std::min(window_bytes, corpus.size() - pos);
        if (len < 2) break;
        ev.windows.emplace_back(corpus.begin() + pos, corpus.begin() + pos + len);
        pos += len;
    }
    if (ev.windows.empty())
        throw DataError("train_lm: validation split cannot fit a window");
    return ev;
}

double evaluate_windows(const TransformerModel& model, const EvalWindows& ev) {
    // Token-weighted mean cross-entropy over the validation windows.
    double loss_sum = 0.0;
    std::size_t tokens = 0;
    for (const auto& w : ev.windows) {
        loss_sum += model.sequence_loss(w) * static_cast<double>(w.size() - 1);
        tokens += w.size() - 1;
    }
    return loss_sum / static_cast<double>(tokens);
}

} // namespace

TrainReport train_lm(const std::string& corpus, const TransformerConfig& config,
                     const TrainConfig& train, TransformerModel* model_out) {
    if (corpus.size() < 10 * config.context_len)
        throw DataError("train_lm: corpus must hold at least 10 context windows");

    TransformerModel model(config);
    const std::size_t window = config.context_len + 1;
    const std::size_t train_size = corpus.size() * 9 / 10;
    if (train_size < window) throw DataError("train_lm: training split too small");
    const EvalWindows eval = make_eval_windows(corpus, train_size, window, train.eval_windows);

    TrainReport report;
    {
        EvalRecord first;
        first.step = 0;
        first.valid_loss = evaluate_windows(model, eval);
        first.valid_ppl = std::exp(first.valid_loss);
        report.evals.push_back(first);
    }

    AdamState adam;
    adam.m.reserve(model.parameters().size());
    for (const auto& [_, t] : model.parameters()) {
        adam.m.push_back(Tensor::zeros(t.shape()));
        adam.v.push_back(Tensor::zeros(t.shape()));
    }

    Rng rng = Rng(config.seed).substream(0xBA7C);
    std::vector<std::vector<unsigned char>> batch;
    auto draw_batch = [&](std::size_t step) {
        if (train.fixed_batch && !batch.empty()) return;
        Rng sub = rng.substream(step);
        batch.clear();
        for (std::size_t b = 0; b < train.batch_size; ++b) {
            const std::size_t start = sub.below(train_size - window + 1);
            batch.emplace_back(corpus.begin() + start, corpus.begin() + start + window);
        }
    };

    std::size_t high_loss_streak = 0;
    for (std::size_t step = 0; step < train.steps; ++step) {
        draw_batch(step);
        TransformerModel::TapeLoss tl = model.batch_loss(batch);
        const double loss = tl.tape.value(tl.loss)[0];
        report.fallback_count += tl.fallback_count;
        report.negative_weight_seen = report.negative_weight_seen || tl.negative_weight_seen;
        if (step == 0) report.initial_loss = loss;

        if (!std::isfinite(loss)) {
            report.diverged = true;
            report.divergence_step = step;
            break;
        }
        if (loss > 2.0 * report.initial_loss) {
            if (++high_loss_streak >= 200) {
                report.diverged = true;
                report.divergence_step = step;
                break;
            }
        } else {
            high_loss_streak = 0;
        }

        const std::vector<Tensor> adj = tl.tape.backward(tl.loss);

        // Global-norm clip over all parameter gradients.
        double norm_sq = 0.0;
        for (std::size_t p = 0; p < tl.param_nodes.size(); ++p) {
            const Tensor& g = adj[tl.param_nodes[p]];
            for (std::size_t i = 0; i < g.size(); ++i) norm_sq += g[i] * g[i];
        }
        const double norm = std::sqrt(norm_sq);
        const double clip_scale = norm > train.grad_clip ? train.grad_clip / norm : 1.0;
        if (!std::isfinite(norm)) {
            report.diverged = true;
            report.divergence_step = step;
            break;
        }

        ++adam.t;
        const double bc1 = 1.0 - std::pow(train.beta1, static_cast<double>(adam.t));
        const double bc2 = 1.0 - std::pow(train.beta2, static_cast<double>(adam.t));
        auto& params = model.parameters();
        for (std::size_t p = 0; p < params.size(); ++p) {
            const Tensor& g = adj[tl.param_nodes[p]];
            if (g.size() == 0) continue;
            Tensor& w = params[p].second;
            Tensor& m = adam.m[p];
            Tensor& v = adam.v[p];
            for (std::size_t i = 0; i < w.size(); ++i) {
                const double gi = g[i] * clip_scale;
                m[i] = train.beta1 * m[i] + (1.0 - train.beta1) * gi;
                v[i] = train.beta2 * v[i] + (1.0 - train.beta2) * gi * gi;
                const double mhat = m[i] / bc1;
                const double vhat = v[i] / bc2;
                w[i] -= train.learning_rate * mhat / (std::sqrt(vhat) + train.adam_epsilon);
            }
        }

        StepRecord rec;
        rec.step = step;
        rec.train_loss = loss;
        if (config.variant == AttentionVariant::fourier) rec.r_values = current_r_values(model);
        report.steps.push_back(rec);

        if (train.eval_interval > 0 && (step + 1) % train.eval_interval == 0) {
            EvalRecord er;
            er.step = step + 1;
            er.valid_loss = evaluate_windows(model, eval);
            er.valid_ppl = std::exp(er.valid_loss);
            report.evals.push_back(er);
        }
    }

    if (!report.diverged &&
        (report.evals.empty() || report.evals.back().step != train.steps)) {
        EvalRecord er;
        er.step = train.steps;
        er.valid_loss = evaluate_windows(model, eval);
        er.valid_ppl = std::exp(er.valid_loss);
        report.evals.push_back(er);
    }
    report.final_valid_loss = report.evals.back().valid_loss;
    report.final_valid_ppl = report.evals.back().valid_ppl;

    if (config.heads >= 2) {
        std::vector<std::vector<unsigned char>> probe;
        for (std::size_t w = 0; w < std::min<std::size_t>(2, eval.windows.size()); ++w) {
            const auto& win = eval.windows[w];
            const std::size_t len = std::min(win.size(), config.context_len);
            probe.emplace_back(win.begin(), win.begin() + len);
        }
        report.head_distance = head_distance(model, probe);
    }
    if (model_out) *model_out = std::move(model);
    return report;
}

HeadDistanceSummary head_distance_stats(
    const std::vector<std::vector<std::vector<double>>>& vectors_per_layer_head) {
    HeadDistanceSummary s;
    const std::size_t layers = vectors_per_layer_head.size();
    if (layers == 0) return s;
    double norm_scale = 1.0;
    for (const auto& layer : vectors_per_layer_head) {
        if (layer.size() < 2)
            throw ParameterError("head_distance: undefined for a single head");
        std::vector<double> dists;
        for (std::size_t a = 0; a < layer.size(); ++a)
            for (std::size_t b = a + 1; b < layer.size(); ++b)
                dists.push_back(std::sqrt(squared_distance(layer[a], layer[b])));
        double mean = 0.0;
        for (double d : dists) mean += d;
        mean /= static_cast<double>(dists.size());
        double var = 0.0;
        for (double d : dists) var += (d - mean) * (d - mean);
        s.layer_mean.push_back(mean);
        s.layer_std.push_back(std::sqrt(var / static_cast<double>(dists.size())));
        norm_scale = std::sqrt(static_cast<double>(layer[0].size()));
    }
    for (std::size_t l = 0; l < layers; ++l) {
        s.mean += s.layer_mean[l];
        s.stddev += s.layer_std[l];
    }
    s.mean /= static_cast<double>(layers);
    s.stddev /= static_cast<double>(layers);
    s.normalized_mean = s.mean / norm_scale;
    s.normalized_std = s.stddev / norm_scale;
    return s;
}

HeadDistanceSummary head_distance(const TransformerModel& model,
                                  const std::vector<std::vector<unsigned char>>& batch) {
    const std::size_t heads = model.config().heads;
    if (heads < 2) throw ParameterError("head_distance: undefined for a single head");
    if (batch.empty()) throw DataError("head_distance: empty batch");

    // Vectorize each head's outputs across the whole batch.
    const std::size_t layers = model.config().layers;
    std::vector<std::vector<std::vector<double>>> flat(
        layers, std::vector<std::vector<double>>(heads));
    for (const auto& bytes : batch) {
        const auto outs = model.head_outputs(bytes);
        for (std::size_t l = 0; l < layers; ++l)
            for (std::size_t h = 0; h < heads; ++h)
                flat[l][h].insert(flat[l][h].end(), outs[l][h].data().begin(),
                                  outs[l][h].data().end());
    }
    return head_distance_stats(flat);
}

std::vector<AblateResult> ablate(const std::vector<AblateCell>& grid, const std::string& corpus,
                                 const TrainConfig& train) {
    if (grid.empty()) throw ParameterError("ablate: empty grid");
    std::vector<AblateResult> results;
    for (const auto& cell : grid) {
        const TrainReport report = train_lm(corpus, cell.config, train);
        AblateResult r;
        r.label = cell.label;
        r.phi_exponent = cell.config.phi_exponent;
        r.r_init = cell.config.r_init;
        r.final_valid_ppl = report.final_valid_ppl;
        r.diverged = report.diverged;
        r.negative_weight_probe = report.negative_weight_seen;
        results.push_back(r);
    }
    return results;
}

} // namespace fia
