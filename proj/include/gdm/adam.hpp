#pragma once

#include <cmath>
#include <vector>

#include "gdm/errors.hpp"

namespace gdm {

struct AdamConfig {
    double lr = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<double> m, v;
    long step = 0;

    void reset(std::size_t size) {
        m.assign(size, 0.0);
        v.assign(size, 0.0);
        step = 0;
    }
};

/// One bias-corrected Adam update. Deterministic; params and grads must agree
/// in size with the state.
inline void adam_step(std::vector<double>& params, const std::vector<double>& grads,
                      AdamState& state, const AdamConfig& cfg) {
    if (state.m.empty()) state.reset(params.size());
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw ShapeMismatch("adam_step: parameter/gradient/state sizes disagree");

    state.step += 1;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        double g = grads[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        double m_hat = state.m[i] / c1;
        double v_hat = state.v[i] / c2;
        params[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
}

} // namespace gdm
