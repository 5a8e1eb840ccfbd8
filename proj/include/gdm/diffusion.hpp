#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "gdm/adam.hpp"
#include "gdm/errors.hpp"
#include "gdm/mlp.hpp"
#include "gdm/rng.hpp"
#include "gdm/schedule.hpp"

namespace gdm {

/// One training pair: target vector plus its conditioning vectors
/// (0 = unconditional, 1 = denoising, 2 = the super-resolution analog).
struct Sample {
    std::vector<double> x0;
    std::vector<std::vector<double>> conditions;
};

struct Dataset {
    std::vector<Sample> items;
    int dim = 0;
    int condition_count = 0;
    int height = 0; // set for image data (row-major flattening)
    int width = 0;
};

/// Forward perturbation x_t = alpha(t) x0 + sigma(t) eps.
template <ScheduleLike S>
std::vector<double> perturb(std::span<const double> x0, double t, const S& schedule,
                            std::span<const double> noise) {
    if (x0.size() != noise.size()) throw ShapeMismatch("perturb: x0 and noise lengths differ");
    SchedulePoint p = schedule.at(t);
    std::vector<double> out(x0.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = p.alpha * x0[i] + p.sigma * noise[i];
    return out;
}

/// Batch objective: mean over the batch of || eps - eps_hat(x_t, c, t) ||^2
/// (squared Euclidean norm, summed over components).
template <DenoiserLike D, ScheduleLike S>
double loss(const D& denoiser, std::span<const Sample> batch, std::span<const double> t_draws,
            std::span<const std::vector<double>> noise_draws, const S& schedule) {
    if (batch.size() != t_draws.size() || batch.size() != noise_draws.size())
        throw ShapeMismatch("loss: batch, t and noise lists must have equal length");
    if (batch.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& sample = batch[i];
        std::vector<double> x_t = perturb(sample.x0, t_draws[i], schedule, noise_draws[i]);
        std::vector<double> eps_hat = denoiser.predict(x_t, sample.conditions, t_draws[i]);
        if (eps_hat.size() != sample.x0.size())
            throw ShapeMismatch("denoiser output length mismatch");
        for (std::size_t k = 0; k < eps_hat.size(); ++k) {
            double d = noise_draws[i][k] - eps_hat[k];
            total += d * d;
        }
    }
    return total / static_cast<double>(batch.size());
}

struct TrainingConfig {
    int batch = 16;
    double lr = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    long iterations = 5000;
    std::uint64_t seed = 1;

    void validate() const {
        if (batch < 1) throw ConfigError("batch size must be >= 1");
        if (!(lr >= 0.0)) throw ConfigError("learning rate must be >= 0");
        if (iterations < 0) throw ConfigError("iteration budget must be >= 0");
    }
};

struct TrainResult {
    std::vector<double> loss_trace; // one entry per iteration
};

/// Training loop: per iteration draw t ~ U[0,1], (x0, c) from the dataset and
/// eps ~ N(0, I) for each batch element, then take one Adam step on the batch
/// gradient.
///
/// Every random draw comes from a stream derived from (seed, iteration), so a
/// run is bit-reproducible and a resumed run replays the exact draws the
/// uninterrupted run would have made. Batch gradients accumulate in element
/// order; results do not depend on scheduling.
template <ScheduleLike S>
TrainResult train(MlpDenoiser& model, const Dataset& dataset, const S& schedule,
                  const TrainingConfig& cfg, AdamState* state = nullptr, long start_iteration = 0) {
    cfg.validate();
    if (dataset.items.empty()) throw ConfigError("dataset is empty");
    if (dataset.dim != model.config().dim)
        throw ShapeMismatch("dataset dimension does not match the model");
    if (dataset.condition_count != model.config().conditions)
        throw ShapeMismatch("dataset conditioning count does not match the model");

    AdamState local;
    AdamState& adam = state ? *state : local;
    if (adam.m.empty()) adam.reset(model.param_count());
    AdamConfig adam_cfg{cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps};

    TrainResult result;
    result.loss_trace.reserve(static_cast<std::size_t>(cfg.iterations));

    MlpDenoiser::Workspace ws = model.make_workspace();
    std::vector<double> grad(model.param_count());
    std::vector<double> noise(dataset.dim), x_t(dataset.dim), dout(dataset.dim);

    for (long iter = start_iteration; iter < start_iteration + cfg.iterations; ++iter) {
        Rng rng = derive_rng(cfg.seed, RngStream::train, static_cast<std::uint64_t>(iter));
        std::fill(grad.begin(), grad.end(), 0.0);
        double batch_loss = 0.0;
        const double inv_batch = 1.0 / cfg.batch;

        for (int b = 0; b < cfg.batch; ++b) {
            double t = rng.uniform();
            const Sample& sample = dataset.items[rng.below(dataset.items.size())];
            for (auto& v : noise) v = rng.normal();

            SchedulePoint p = schedule.at(t);
            for (int k = 0; k < dataset.dim; ++k) x_t[k] = p.alpha * sample.x0[k] + p.sigma * noise[k];

            model.forward(x_t, sample.conditions, t, ws);
            const auto& eps_hat = ws.output;
            for (int k = 0; k < dataset.dim; ++k) {
                double diff = eps_hat[k] - noise[k];
                batch_loss += diff * diff;
                dout[k] = 2.0 * diff * inv_batch;
            }
            model.backward(dout, ws, grad.data());
        }
        batch_loss *= inv_batch;
        if (!std::isfinite(batch_loss))
            throw NonFiniteLoss("training loss became non-finite at iteration " + std::to_string(iter), iter);

        adam_step(model.params(), grad, adam, adam_cfg);
        result.loss_trace.push_back(batch_loss);
    }
    return result;
}

} // namespace gdm
