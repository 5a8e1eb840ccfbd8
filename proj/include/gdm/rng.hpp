#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace gdm {

/// Counter-based seeded generator (splitmix64 core).
///
/// The library never uses std::normal_distribution or other
/// implementation-defined distributions: every draw below is fully specified,
/// so a (seed, stream, index) triple reproduces the same bytes on any
/// platform. Streams derived via derive() are independent and can be consumed
/// in parallel without coordination.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(mix(seed ^ kGamma)) {}

    /// Child stream for a (tag, index) pair, e.g. one per training iteration
    /// or one per sampled image. Decoupled from this stream's position.
    static Rng derive(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
        std::uint64_t s = mix(seed + kGamma * (tag + 1));
        s = mix(s + kGamma * (index + 1));
        return Rng(s);
    }

    std::uint64_t next_u64() {
        state_ += kGamma;
        return mix(state_);
    }

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller. Draws two uniforms per pair; the
    /// second member of the pair is cached so sequences stay aligned.
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        // u1 in (0,1]: shift by one ulp so log() never sees zero.
        double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
        double u2 = uniform();
        double radius = std::sqrt(-2.0 * std::log(u1));
        double angle = 2.0 * kPi * u2;
        cached_ = radius * std::sin(angle);
        have_cached_ = true;
        return radius * std::cos(angle);
    }

    std::vector<double> normal_vector(std::size_t count) {
        std::vector<double> out(count);
        for (auto& v : out) v = normal();
        return out;
    }

    /// Integer in [0, bound) by rejection-free multiply-shift (bound <= 2^32).
    std::uint64_t below(std::uint64_t bound) {
        return (static_cast<unsigned __int128>(next_u64()) * bound) >> 64;
    }

private:
    static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ull;
    static constexpr double kPi = 3.14159265358979323846;

    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ull;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebull;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t state_;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

/// Stream tags; keeps draw domains from colliding when derived from one seed.
enum class RngStream : std::uint64_t {
    init = 1,      // model parameter initialisation
    train = 2,     // per-iteration training draws
    sample = 3,    // per-sample noise
    data = 4,      // dataset generation
    misc = 5,
};

inline Rng derive_rng(std::uint64_t seed, RngStream stream, std::uint64_t index) {
    return Rng::derive(seed, static_cast<std::uint64_t>(stream), index);
}

} // namespace gdm
