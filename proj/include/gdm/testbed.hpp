#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "gdm/diffusion.hpp"
#include "gdm/errors.hpp"
#include "gdm/rng.hpp"
#include "gdm/schedule.hpp"

namespace gdm {

/// Diagonal Gaussian data distribution used by the analytic testbed.
struct GaussianTarget {
    std::vector<double> mean;
    std::vector<double> variance;

    void validate() const {
        if (mean.size() != variance.size() || mean.empty())
            throw ShapeMismatch("GaussianTarget: mean/variance sizes disagree");
        for (double v : variance)
            if (!(v > 0.0)) throw InvalidSigma("GaussianTarget variances must be positive");
    }
    int dim() const { return static_cast<int>(mean.size()); }
};

/// Bayes-optimal noise predictor for Gaussian data under a given schedule:
/// the marginal is N(alpha mu, alpha^2 Sigma + sigma^2 I), so
///   eps*(x, t) = sigma (alpha^2 Sigma + sigma^2 I)^{-1} (x - alpha mu),
/// elementwise for the diagonal covariance.
template <ScheduleLike S>
class GaussianOracle {
public:
    GaussianOracle(GaussianTarget target, S schedule)
        : target_(std::move(target)), schedule_(std::move(schedule)) {
        target_.validate();
    }

    std::vector<double> predict(std::span<const double> x,
                                std::span<const std::vector<double>>, double t) const {
        if (static_cast<int>(x.size()) != target_.dim())
            throw ShapeMismatch("oracle input length mismatch");
        SchedulePoint p = schedule_.at(t);
        std::vector<double> eps(x.size());
        const double a2 = p.alpha * p.alpha;
        const double s2 = p.sigma * p.sigma;
        for (std::size_t i = 0; i < eps.size(); ++i)
            eps[i] = p.sigma * (x[i] - p.alpha * target_.mean[i]) / (a2 * target_.variance[i] + s2);
        return eps;
    }

    const GaussianTarget& target() const { return target_; }

private:
    GaussianTarget target_;
    S schedule_;
};

template <ScheduleLike S>
GaussianOracle<S> analytic_oracle(GaussianTarget target, const S& schedule) {
    return GaussianOracle<S>(std::move(target), schedule);
}

/// Predicts zero noise everywhere; the reference "untrained" baseline.
struct ZeroDenoiser {
    int dim;
    std::vector<double> predict(std::span<const double> x,
                                std::span<const std::vector<double>>, double) const {
        return std::vector<double>(x.size(), 0.0);
    }
};

/// i.i.d. draws from a diagonal Gaussian.
inline Dataset make_gaussian_dataset(const GaussianTarget& target, int count, std::uint64_t seed) {
    target.validate();
    Dataset ds;
    ds.dim = target.dim();
    ds.condition_count = 0;
    ds.items.reserve(count);
    for (int i = 0; i < count; ++i) {
        Rng rng = derive_rng(seed, RngStream::data, static_cast<std::uint64_t>(i));
        Sample s;
        s.x0.resize(ds.dim);
        for (int k = 0; k < ds.dim; ++k)
            s.x0[k] = target.mean[k] + std::sqrt(target.variance[k]) * rng.normal();
        ds.items.push_back(std::move(s));
    }
    return ds;
}

/// 2-D Gaussian mixture (equal weights) for quick training smoke tests.
inline Dataset make_mixture_dataset(int count, std::uint64_t seed) {
    const double centers[4][2] = {{-0.5, -0.5}, {0.5, -0.5}, {-0.5, 0.5}, {0.5, 0.5}};
    const double spread = 0.08;
    Dataset ds;
    ds.dim = 2;
    ds.condition_count = 0;
    ds.items.reserve(count);
    for (int i = 0; i < count; ++i) {
        Rng rng = derive_rng(seed, RngStream::data, static_cast<std::uint64_t>(i));
        const double* c = centers[rng.below(4)];
        Sample s;
        s.x0 = {c[0] + spread * rng.normal(), c[1] + spread * rng.normal()};
        ds.items.push_back(std::move(s));
    }
    return ds;
}

enum class ToyTask { unconditional, denoise, super_resolution };

/// Recipe for the synthetic image tasks: random axis-aligned rectangles and
/// discs on a dark background, degraded by additive noise (denoise) or
/// replaced by two perturbed neighbor slices (super-resolution analog).
struct ToyImageRecipe {
    int side = 16;
    int count = 256;
    ToyTask task = ToyTask::denoise;
    double noise_std = 0.3; // degradation strength for the denoise task
    int max_shapes = 3;
    std::uint64_t seed = 0;
};

namespace detail {

inline void draw_shapes(std::vector<double>& img, int side, Rng& rng, int max_shapes,
                        double jitter = 0.0) {
    std::fill(img.begin(), img.end(), -1.0);
    int shapes = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_shapes)));
    for (int s = 0; s < shapes; ++s) {
        bool disc = rng.uniform() < 0.5;
        double intensity = rng.uniform(-0.2, 1.0);
        double cx = rng.uniform(0.2, 0.8) * side + jitter;
        double cy = rng.uniform(0.2, 0.8) * side + jitter;
        double half_w = rng.uniform(0.08, 0.3) * side + jitter;
        double half_h = disc ? half_w : rng.uniform(0.08, 0.3) * side + jitter;
        for (int y = 0; y < side; ++y) {
            for (int x = 0; x < side; ++x) {
                bool inside;
                if (disc) {
                    double dx = (x + 0.5 - cx) / half_w, dy = (y + 0.5 - cy) / half_w;
                    inside = dx * dx + dy * dy <= 1.0;
                } else {
                    inside = std::abs(x + 0.5 - cx) <= half_w && std::abs(y + 0.5 - cy) <= half_h;
                }
                if (inside) img[y * side + x] = intensity;
            }
        }
    }
}

inline void clip_unit(std::vector<double>& v) {
    for (auto& x : v) x = std::clamp(x, -1.0, 1.0);
}

} // namespace detail

/// Clean/degraded pairs (denoise), neighbor-slice triples (super_resolution)
/// or bare images (unconditional). Same seed, same dataset.
inline Dataset make_toy_images(const ToyImageRecipe& recipe) {
    if (recipe.side < 8) throw ConfigError("toy images need side >= 8");
    if (recipe.count < 1) throw ConfigError("toy image count must be >= 1");
    Dataset ds;
    ds.dim = recipe.side * recipe.side;
    ds.height = recipe.side;
    ds.width = recipe.side;
    ds.condition_count = recipe.task == ToyTask::unconditional ? 0
                         : recipe.task == ToyTask::denoise     ? 1
                                                               : 2;
    ds.items.reserve(recipe.count);
    std::vector<double> img(ds.dim);
    for (int i = 0; i < recipe.count; ++i) {
        Rng rng = derive_rng(recipe.seed, RngStream::data, static_cast<std::uint64_t>(i));
        Sample s;

        if (recipe.task == ToyTask::super_resolution) {
            // Two neighbor slices from the same scene, drawn with jittered
            // shape extents; the center slice is the reconstruction target.
            std::uint64_t scene = rng.next_u64();
            auto render = [&](double jitter) {
                Rng scene_rng = Rng::derive(scene, 0, 0);
                detail::draw_shapes(img, recipe.side, scene_rng, recipe.max_shapes, jitter);
                detail::clip_unit(img);
                return img;
            };
            s.x0 = render(0.0);
            s.conditions.push_back(render(-0.045 * recipe.side));
            s.conditions.push_back(render(+0.045 * recipe.side));
        } else {
            detail::draw_shapes(img, recipe.side, rng, recipe.max_shapes);
            detail::clip_unit(img);
            s.x0 = img;
            if (recipe.task == ToyTask::denoise) {
                std::vector<double> degraded = s.x0;
                for (auto& v : degraded) v += recipe.noise_std * rng.normal();
                detail::clip_unit(degraded);
                s.conditions.push_back(std::move(degraded));
            }
        }
        ds.items.push_back(std::move(s));
    }
    return ds;
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty()) throw ShapeMismatch("pearson: length mismatch");
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= a.size();
    mb /= b.size();
    double num = 0, va = 0, vb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - ma) * (b[i] - mb);
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
    }
    if (va == 0.0 || vb == 0.0) return 0.0;
    return num / std::sqrt(va * vb);
}

} // namespace gdm
