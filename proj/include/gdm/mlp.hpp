#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "gdm/errors.hpp"
#include "gdm/rng.hpp"
#include "gdm/schedule.hpp"

namespace gdm {

/// Feed-forward noise predictor: input is the noisy state, the conditioning
/// vectors and a sinusoidal embedding of t, all concatenated.
struct MlpConfig {
    int dim = 0;                          // data dimension n
    int conditions = 0;                   // conditioning vectors (0, 1 or 2)
    std::vector<int> hidden = {128, 128, 128};
    int time_features = 16;               // even; sin/cos pairs

    int input_size() const { return dim * (1 + conditions) + time_features; }
};

namespace detail {

inline double silu(double z) { return z / (1.0 + std::exp(-z)); }

inline double silu_grad(double z) {
    double s = 1.0 / (1.0 + std::exp(-z));
    return s * (1.0 + z * (1.0 - s));
}

} // namespace detail

/// Sinusoidal time embedding with geometrically spaced frequencies
/// (pi * 2^k for pair k); t in [0,1].
inline void time_embedding(double t, int features, double* out) {
    constexpr double kPi = 3.14159265358979323846;
    int pairs = features / 2;
    double omega = kPi;
    for (int k = 0; k < pairs; ++k) {
        out[2 * k] = std::sin(omega * t);
        out[2 * k + 1] = std::cos(omega * t);
        omega *= 2.0;
    }
}

/// Three-hidden-layer MLP with SiLU activations and a linear output layer.
///
/// Parameters live in one flat vector (weights row-major, then bias, per
/// layer) so the optimizer, the gradient check and the checkpoint writer all
/// address them uniformly. The output layer starts at zero so an untrained
/// model predicts zero noise.
class MlpDenoiser {
public:
    MlpDenoiser() = default;

    MlpDenoiser(MlpConfig config, std::uint64_t seed) : cfg_(std::move(config)) {
        if (cfg_.dim < 1) throw ShapeMismatch("MLP dim must be >= 1");
        if (cfg_.conditions < 0 || cfg_.conditions > 2)
            throw ShapeMismatch("MLP supports 0..2 conditioning vectors");
        if (cfg_.time_features % 2 != 0 || cfg_.time_features <= 0)
            throw ShapeMismatch("time_features must be positive and even");
        for (int h : cfg_.hidden)
            if (h < 1) throw ShapeMismatch("hidden layer widths must be >= 1");
        build_layout();
        params_.assign(total_params_, 0.0);
        Rng rng = derive_rng(seed, RngStream::init, 0);
        for (std::size_t l = 0; l + 1 < layer_in_.size(); ++l) {
            double scale = std::sqrt(2.0 / layer_in_[l]);
            double* w = params_.data() + w_off_[l];
            for (int i = 0; i < layer_out_[l] * layer_in_[l]; ++i) w[i] = scale * rng.normal();
        }
        // final layer stays zero
    }

    const MlpConfig& config() const { return cfg_; }
    std::size_t param_count() const { return total_params_; }

    /// Schedule-aware preconditioning around the network (fixed, non-learned).
    ///
    /// With s = sigma/alpha and y = x/alpha, the prediction becomes
    ///   eps_hat = s/(sd^2+s^2) y  -  sd/sqrt(sd^2+s^2) F(y/sqrt(sd^2+s^2), c, t),
    /// so the inner network F sees unit-scale inputs and fits an O(1) residual
    /// at every noise level. Raw variance-exploding states span five orders of
    /// magnitude and stall optimisation without this. The external contract is
    /// still eps_hat(x, c, t); checkpoints hold only the parameters, and the
    /// caller re-attaches the schedule hook after loading.
    void set_preconditioning(std::function<SchedulePoint(double)> schedule_eval,
                             double data_std = 0.5) {
        schedule_eval_ = std::move(schedule_eval);
        data_std_ = data_std;
    }
    bool has_preconditioning() const { return static_cast<bool>(schedule_eval_); }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }
    int layer_count() const { return static_cast<int>(layer_in_.size()); }
    int layer_in(int l) const { return layer_in_[l]; }
    int layer_out(int l) const { return layer_out_[l]; }

    /// Scratch buffers reused across calls; one per training thread.
    struct Workspace {
        std::vector<double> input;
        std::vector<std::vector<double>> pre;   // pre-activations per layer
        std::vector<std::vector<double>> act;   // activations per layer (post-SiLU)
        std::vector<double> output;             // final eps_hat
        std::vector<double> dcur, dprev;
        double out_gain = 1.0;                  // d(eps_hat)/d(network output)
    };

    Workspace make_workspace() const {
        Workspace ws;
        ws.input.resize(cfg_.input_size());
        ws.pre.resize(layer_in_.size());
        ws.act.resize(layer_in_.size());
        for (std::size_t l = 0; l < layer_in_.size(); ++l) {
            ws.pre[l].resize(layer_out_[l]);
            ws.act[l].resize(layer_out_[l]);
        }
        ws.output.resize(cfg_.dim);
        std::size_t widest = static_cast<std::size_t>(cfg_.input_size());
        for (int w : layer_out_) widest = std::max(widest, static_cast<std::size_t>(w));
        ws.dcur.resize(widest);
        ws.dprev.resize(widest);
        return ws;
    }

    /// Forward pass; eps_hat lands in ws.output.
    void forward(std::span<const double> x, std::span<const std::vector<double>> conditions,
                 double t, Workspace& ws) const {
        if (static_cast<int>(x.size()) != cfg_.dim) throw ShapeMismatch("denoiser input length mismatch");
        if (static_cast<int>(conditions.size()) != cfg_.conditions)
            throw ShapeMismatch("denoiser conditioning count mismatch");

        double in_gain = 1.0;   // multiplies x before the first layer
        double skip_gain = 0.0; // skip path x -> eps_hat
        ws.out_gain = 1.0;
        if (schedule_eval_) {
            SchedulePoint p = schedule_eval_(t);
            const double s = p.sigma / p.alpha;
            const double denom = data_std_ * data_std_ + s * s;
            in_gain = 1.0 / (p.alpha * std::sqrt(denom));
            skip_gain = s / (denom * p.alpha);
            ws.out_gain = -data_std_ / std::sqrt(denom);
        }

        double* in = ws.input.data();
        for (int i = 0; i < cfg_.dim; ++i) in[i] = in_gain * x[i];
        int offset = cfg_.dim;
        for (const auto& c : conditions) {
            if (static_cast<int>(c.size()) != cfg_.dim)
                throw ShapeMismatch("condition vector length mismatch");
            std::copy(c.begin(), c.end(), in + offset);
            offset += cfg_.dim;
        }
        time_embedding(t, cfg_.time_features, in + offset);

        const double* cur = in;
        for (std::size_t l = 0; l < layer_in_.size(); ++l) {
            const int rows = layer_out_[l], cols = layer_in_[l];
            const double* w = params_.data() + w_off_[l];
            const double* b = params_.data() + b_off_[l];
            double* pre = ws.pre[l].data();
            for (int r = 0; r < rows; ++r) {
                const double* wr = w + static_cast<std::size_t>(r) * cols;
                double acc = b[r];
                for (int c = 0; c < cols; ++c) acc += wr[c] * cur[c];
                pre[r] = acc;
            }
            double* act = ws.act[l].data();
            if (l + 1 < layer_in_.size()) {
                for (int r = 0; r < rows; ++r) act[r] = detail::silu(pre[r]);
            } else {
                std::copy(pre, pre + rows, act);
            }
            cur = act;
        }

        const auto& net_out = ws.act.back();
        for (int i = 0; i < cfg_.dim; ++i)
            ws.output[i] = skip_gain * x[i] + ws.out_gain * net_out[i];
    }

    /// Reverse pass for the most recent forward(); accumulates parameter
    /// gradients into grad (size param_count) given d(loss)/d(eps_hat).
    /// The skip path carries no parameters.
    void backward(std::span<const double> output_grad, Workspace& ws, double* grad) const {
        const int layers = static_cast<int>(layer_in_.size());
        double* dcur = ws.dcur.data();
        double* dprev = ws.dprev.data();
        for (std::size_t i = 0; i < output_grad.size(); ++i)
            dcur[i] = ws.out_gain * output_grad[i];

        for (int l = layers - 1; l >= 0; --l) {
            const int rows = layer_out_[l], cols = layer_in_[l];
            if (l + 1 < layers) {
                const double* pre = ws.pre[l].data();
                for (int r = 0; r < rows; ++r) dcur[r] *= detail::silu_grad(pre[r]);
            }
            const double* below = (l == 0) ? ws.input.data() : ws.act[l - 1].data();
            double* gw = grad + w_off_[l];
            double* gb = grad + b_off_[l];
            for (int r = 0; r < rows; ++r) {
                double d = dcur[r];
                gb[r] += d;
                double* gwr = gw + static_cast<std::size_t>(r) * cols;
                for (int c = 0; c < cols; ++c) gwr[c] += d * below[c];
            }
            if (l > 0) {
                const double* w = params_.data() + w_off_[l];
                std::fill(dprev, dprev + cols, 0.0);
                for (int r = 0; r < rows; ++r) {
                    const double* wr = w + static_cast<std::size_t>(r) * cols;
                    double d = dcur[r];
                    for (int c = 0; c < cols; ++c) dprev[c] += d * wr[c];
                }
                std::swap(dcur, dprev);
            }
        }
        if (dcur != ws.dcur.data()) std::swap(ws.dcur, ws.dprev);
    }

    /// Allocating convenience for samplers and oracles.
    std::vector<double> predict(std::span<const double> x,
                                std::span<const std::vector<double>> conditions, double t) const {
        Workspace ws = make_workspace();
        forward(x, conditions, t, ws);
        return ws.output;
    }

private:
    void build_layout() {
        layer_in_.clear();
        layer_out_.clear();
        int in = cfg_.input_size();
        for (int h : cfg_.hidden) {
            layer_in_.push_back(in);
            layer_out_.push_back(h);
            in = h;
        }
        layer_in_.push_back(in);
        layer_out_.push_back(cfg_.dim);

        w_off_.clear();
        b_off_.clear();
        std::size_t off = 0;
        for (std::size_t l = 0; l < layer_in_.size(); ++l) {
            w_off_.push_back(off);
            off += static_cast<std::size_t>(layer_in_[l]) * layer_out_[l];
            b_off_.push_back(off);
            off += layer_out_[l];
        }
        total_params_ = off;
    }

    MlpConfig cfg_{};
    std::vector<int> layer_in_, layer_out_;
    std::vector<std::size_t> w_off_, b_off_;
    std::size_t total_params_ = 0;
    std::vector<double> params_;
    std::function<SchedulePoint(double)> schedule_eval_;
    double data_std_ = 0.5;
};

/// Attaches the standard preconditioning hook for a schedule value type.
template <ScheduleLike S>
void precondition_for(MlpDenoiser& model, const S& schedule, double data_std = 0.5) {
    model.set_preconditioning([schedule](double t) { return schedule.at(t); }, data_std);
}

template <typename D>
concept DenoiserLike = requires(const D& d, std::span<const double> x,
                                std::span<const std::vector<double>> conds, double t) {
    { d.predict(x, conds, t) } -> std::convertible_to<std::vector<double>>;
};

} // namespace gdm
