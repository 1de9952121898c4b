#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fia/attention.hpp"
#include "fia/autodiff.hpp"
#include "fia/tensor.hpp"

namespace fia {

struct TransformerConfig {
    std::size_t layers = 2;
    std::size_t d_model = 32;
    std::size_t heads = 2;
    std::size_t d_ff = 128;
    std::size_t context_len = 64;
    std::size_t vocab = 256; // byte-level
    AttentionVariant variant = AttentionVariant::dot;
    int phi_exponent = 4;
    double r_init = 2.0; // text default; 1.0 suits non-text modalities
    bool r_per_dim = false;
    std::uint64_t seed = 1;
};

// Fixed optimizer/training defaults are part of the protocol so ablation
// cells stay comparable; only scale knobs (steps, batch) vary per run.
struct TrainConfig {
    std::size_t steps = 2000;
    std::size_t batch_size = 4;
    double learning_rate = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
    double grad_clip = 1.0;
    std::size_t eval_interval = 250;
    std::size_t eval_windows = 32;
    bool fixed_batch = false; // reuse the first batch every step (tests)
};

struct StepRecord {
    std::size_t step = 0;
    double train_loss = 0.0;
    std::vector<double> r_values; // learnable R per head per layer (fourier)
};

struct EvalRecord {
    std::size_t step = 0;
    double valid_loss = 0.0;
    double valid_ppl = 0.0;
};

struct HeadDistanceSummary {
    std::vector<double> layer_mean; // mean pairwise L2 distance per layer
    std::vector<double> layer_std;  // std of pairwise distances per layer
    double mean = 0.0;              // layer-average of means
    double stddev = 0.0;            // layer-average of stds
    double normalized_mean = 0.0;   // distances / sqrt(#elements)
    double normalized_std = 0.0;
};

struct TrainReport {
    std::vector<StepRecord> steps;
    std::vector<EvalRecord> evals;
    bool diverged = false;
    std::size_t divergence_step = 0;
    long fallback_count = 0;
    bool negative_weight_seen = false;
    double initial_loss = 0.0;
    double final_valid_loss = 0.0;
    double final_valid_ppl = 0.0;
    HeadDistanceSummary head_distance; // populated when heads >= 2
};

class TransformerModel {
  public:
    explicit TransformerModel(const TransformerConfig& config);

    const TransformerConfig& config() const { return config_; }
    std::size_t parameter_count() const;
    // Closed form for the same number:
    //   vocab*D                                  token embedding
    // + layers * (4D + 4D^2 + 2*D*Dff + Dff + D) norms, Q/K/V/O, feed-forward
    // + layers * H * (1 or D/H)                  bandwidths (fourier variant)
    // + 2D + vocab*D + vocab                     final norm, output projection
    static std::size_t expected_parameter_count(const TransformerConfig& config);

    std::vector<std::pair<std::string, Tensor>>& parameters() { return params_; }
    const std::vector<std::pair<std::string, Tensor>>& parameters() const { return params_; }

    // Mean next-byte cross-entropy of one sequence (length context_len + 1).
    double sequence_loss(const std::vector<unsigned char>& bytes) const;

    // Per-head attention outputs (post-attention, pre-output-projection) for
    // every layer; outer index layer, inner index head.
    std::vector<std::vector<Tensor>> head_outputs(const std::vector<unsigned char>& bytes) const;

    struct TapeLoss {
        Tape tape;
        NodeId loss;
        std::vector<NodeId> param_nodes;
        long fallback_count = 0;
        bool negative_weight_seen = false;
    };
    // Builds the forward graph for a batch of sequences and returns the tape
    // with the mean loss node (used by the trainer and by gradcheck).
    TapeLoss batch_loss(const std::vector<std::vector<unsigned char>>& batch) const;

    void save_checkpoint(const std::string& path) const;
    void load_checkpoint(const std::string& path);

  private:
    friend struct ModelGraphBuilder;
    TransformerConfig config_;
    std::vector<std::pair<std::string, Tensor>> params_;
    Tensor positional_; // sinusoidal, constant
};

TrainReport train_lm(const std::string& corpus, const TransformerConfig& config,
                     const TrainConfig& train, TransformerModel* model_out = nullptr);

// Average pairwise L2 distance between head outputs, per layer and
// layer-averaged. Requires heads >= 2.
HeadDistanceSummary head_distance(const TransformerModel& model,
                                  const std::vector<std::vector<unsigned char>>& batch);

// The same statistics on pre-vectorized head outputs (outer index layer,
// inner index head).
HeadDistanceSummary head_distance_stats(
    const std::vector<std::vector<std::vector<double>>>& vectors_per_layer_head);

struct AblateCell {
    std::string label;
    TransformerConfig config;
};

struct AblateResult {
    std::string label;
    int phi_exponent = 0;
    double r_init = 0.0;
    double final_valid_ppl = 0.0;
    bool diverged = false;
    bool negative_weight_probe = false; // any negative pairwise weight seen
};

// Trains every cell with the shared corpus and seed and records outcome
// flags; divergence is an outcome, never an exception.
std::vector<AblateResult> ablate(const std::vector<AblateCell>& grid, const std::string& corpus,
                                 const TrainConfig& train);

} // namespace fia
