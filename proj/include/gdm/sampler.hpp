#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gdm/errors.hpp"
#include "gdm/mlp.hpp"
#include "gdm/parallel.hpp"
#include "gdm/rng.hpp"
#include "gdm/schedule.hpp"

namespace gdm {

/// Sampler settings. truncation_ratio empty means untruncated (t_N = 1).
struct SamplerConfig {
    int steps = 6;
    std::optional<double> truncation_ratio = 3.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (steps < 1) throw ConfigError("sampler needs at least one step");
        if (truncation_ratio && !(*truncation_ratio > 0.0))
            throw ConfigError("truncation ratio must be positive");
    }
};

/// Strictly decreasing knots t_N > ... > t_0 = 0, stored in loop order
/// (knots[0] = t_N, knots[steps] = 0).
struct TimeGrid {
    std::vector<double> knots;
    double start() const { return knots.front(); }
};

/// Uniform grid from t_N down to 0; t_N comes from inverting the configured
/// sigma/alpha ratio on the schedule.
template <ScheduleLike S>
TimeGrid make_time_grid(const S& schedule, const SamplerConfig& cfg) {
    cfg.validate();
    double t_start = cfg.truncation_ratio ? invert_noise_ratio(schedule, *cfg.truncation_ratio) : 1.0;
    TimeGrid grid;
    grid.knots.resize(static_cast<std::size_t>(cfg.steps) + 1);
    for (int k = 0; k <= cfg.steps; ++k)
        grid.knots[k] = t_start * static_cast<double>(cfg.steps - k) / cfg.steps;
    grid.knots.back() = 0.0;
    return grid;
}

/// Truncated-sampling initialisation x_{t_N} = alpha(t_N) c + sigma(t_N) eps.
/// With c = 0 and t_N = 1 this is the pure-noise start.
template <ScheduleLike S>
std::vector<double> gts_init(std::span<const double> condition, double t_start,
                             std::span<const double> noise, const S& schedule) {
    if (condition.size() != noise.size())
        throw ShapeMismatch("gts_init: condition and noise lengths differ");
    SchedulePoint p = schedule.at(t_start);
    std::vector<double> x(condition.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = p.alpha * condition[i] + p.sigma * noise[i];
    return x;
}

/// One probability-flow Euler step from t_k down to t_{k-1}:
/// x' = x + (t_{k-1} - t_k) [ (a'/a) x + (s' - (a'/a) s) eps_hat(x, c, t_k) ],
/// with the schedule and its analytic derivatives evaluated at t_k.
template <ScheduleLike S, DenoiserLike D>
std::vector<double> euler_step(std::span<const double> x, double t_k, double t_prev,
                               const D& denoiser, std::span<const std::vector<double>> conditions,
                               const S& schedule) {
    if (!(t_prev < t_k)) throw OutOfRange("euler_step: t_{k-1} must be below t_k");
    SchedulePoint p = schedule.at(t_k);
    std::vector<double> eps_hat = denoiser.predict(x, conditions, t_k);
    if (eps_hat.size() != x.size()) throw ShapeMismatch("denoiser output length mismatch");

    const double dt = t_prev - t_k; // negative
    const double drift = p.dalpha / p.alpha;
    const double noise_coef = p.dsigma - drift * p.sigma;
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = x[i] + dt * (drift * x[i] + noise_coef * eps_hat[i]);
        if (!std::isfinite(out[i])) throw NonFinite("sampler state became non-finite");
    }
    return out;
}

/// Full deterministic sampling pass. Conditions are required whenever the
/// start is truncated (the initialisation noises the condition); untruncated
/// unconditional runs start from pure noise sigma(1) eps.
///
/// noise, when supplied, replaces the internal draw (tests inject it);
/// otherwise it derives from (seed, sample_index).
template <ScheduleLike S, DenoiserLike D>
std::vector<double> sample(const SamplerConfig& cfg, const S& schedule, const D& denoiser, int dim,
                           std::span<const std::vector<double>> conditions,
                           std::uint64_t sample_index = 0,
                           const std::vector<double>* injected_noise = nullptr) {
    cfg.validate();
    if (cfg.truncation_ratio && conditions.empty())
        throw MissingCondition("truncated sampling requires a condition vector");

    TimeGrid grid = make_time_grid(schedule, cfg);
    std::vector<double> noise;
    if (injected_noise) {
        noise = *injected_noise;
    } else {
        Rng rng = derive_rng(cfg.seed, RngStream::sample, sample_index);
        noise = rng.normal_vector(static_cast<std::size_t>(dim));
    }
    if (static_cast<int>(noise.size()) != dim) throw ShapeMismatch("noise length mismatch");

    std::vector<double> zero;
    std::span<const double> anchor;
    if (!conditions.empty()) {
        anchor = conditions.front();
    } else {
        zero.assign(static_cast<std::size_t>(dim), 0.0);
        anchor = zero;
    }

    std::vector<double> x = gts_init(anchor, grid.start(), noise, schedule);
    for (int k = 0; k < cfg.steps; ++k)
        x = euler_step(x, grid.knots[k], grid.knots[k + 1], denoiser, conditions, schedule);
    return x;
}

/// Reference integrator: the same code path at N = 1024.
template <ScheduleLike S, DenoiserLike D>
std::vector<double> fine_step_oracle(const SamplerConfig& cfg, const S& schedule, const D& denoiser,
                                     int dim, std::span<const std::vector<double>> conditions,
                                     std::uint64_t sample_index = 0,
                                     const std::vector<double>* injected_noise = nullptr) {
    SamplerConfig fine = cfg;
    fine.steps = 1024;
    return sample(fine, schedule, denoiser, dim, conditions, sample_index, injected_noise);
}

/// Batch sampling: one independent draw per entry of conditions_list (pass
/// empty vectors-of-conditions for unconditional batches). Each index owns a
/// derived noise stream and its own output slot, so results do not depend on
/// the worker count.
template <ScheduleLike S, DenoiserLike D>
std::vector<std::vector<double>> sample_batch(
    const SamplerConfig& cfg, const S& schedule, const D& denoiser, int dim,
    const std::vector<std::vector<std::vector<double>>>& conditions_list) {
    std::vector<std::vector<double>> outputs(conditions_list.size());
    parallel_for(conditions_list.size(), [&](std::size_t i) {
        outputs[i] = sample(cfg, schedule, denoiser, dim, conditions_list[i], i);
    });
    return outputs;
}

} // namespace gdm
