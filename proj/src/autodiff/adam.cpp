#include "deepsep/adam.hpp"

#include <cmath>
#include <string>

namespace deepsep {

void adam_step(std::span<Tensor> params, AdamState& state) {
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!params[i].requires_grad() || !params[i].has_grad()) {
            throw GraphError("adam_step: parameter " + std::to_string(i) + " has no gradient");
        }
    }
    if (state.first_moment.empty()) {
        state.first_moment.resize(params.size());
        state.second_moment.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            state.first_moment[i].assign(params[i].numel(), 0.0);
            state.second_moment[i].assign(params[i].numel(), 0.0);
        }
    }
    if (state.first_moment.size() != params.size()) {
        throw ShapeError("adam_step: optimizer state tracks " +
                         std::to_string(state.first_moment.size()) + " tensors, got " +
                         std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (state.first_moment[i].size() != params[i].numel() ||
            state.second_moment[i].size() != params[i].numel()) {
            throw ShapeError("adam_step: moment buffer shape mismatch for parameter " +
                             std::to_string(i));
        }
    }

    const auto& c = state.config;
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(c.beta1, t);
    const double correction2 = 1.0 - std::pow(c.beta2, t);

    for (std::size_t i = 0; i < params.size(); ++i) {
        auto w = params[i].data();
        auto g = params[i].grad();
        auto& m = state.first_moment[i];
        auto& v = state.second_moment[i];
        for (std::size_t j = 0; j < w.size(); ++j) {
            m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
            v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
            const double m_hat = m[j] / correction1;
            const double v_hat = v[j] / correction2;
            w[j] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
            g[j] = 0.0;
        }
    }
}

}  // namespace deepsep
