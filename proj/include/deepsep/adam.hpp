#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "deepsep/tensor.hpp"

namespace deepsep {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Moment buffers line up index-for-index with the parameter list passed to
/// adam_step; they are allocated lazily on the first step.
struct AdamState {
    AdamConfig config;
    std::uint64_t step = 0;
    std::vector<std::vector<double>> first_moment;
    std::vector<std::vector<double>> second_moment;
};

/// Bias-corrected adaptive-moment update, applied in place. Zeroes the
/// gradients afterwards. Throws GraphError if any parameter has no gradient.
void adam_step(std::span<Tensor> params, AdamState& state);

}  // namespace deepsep
