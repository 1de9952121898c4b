#pragma once

#include "fia/kernels.hpp"

namespace fia {

enum class MaskMode { none, causal };

// What to do with a query row whose weights are all zero: average the
// unmasked values (and count the event) or raise EmptyNeighborhoodError.
enum class FallbackMode { uniform, error };

struct FourierAttentionOptions {
    PhiKernel kernel;
    MaskMode mask = MaskMode::none;
    FallbackMode fallback = FallbackMode::uniform;
    bool log_domain = true;
    SincConfig sinc;
};

// Bandwidth plus evaluation options; R stays positive through the
// exponential reparameterization applied by the model layer (the tape stores
// rho and feeds R = exp(rho) in here).
struct FourierAttentionParams {
    Bandwidth r = Bandwidth::scalar(1.0);
    FourierAttentionOptions options;
};

} // namespace fia
