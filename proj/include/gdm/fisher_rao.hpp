#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "gdm/errors.hpp"
#include "gdm/schedule.hpp"

namespace gdm {

/// Diagonal blocks of the Fisher information of N(alpha x0, sigma^2 I_n)
/// parameterised by (mean, sigma): the mean block is (1/sigma^2) I_n and the
/// sigma block is the scalar 2n/sigma^2.
struct FisherInformation {
    double mean_scale = 0.0;
    double sigma_scale = 0.0;
};

inline FisherInformation fisher_information(double sigma, int dim) {
    if (!(sigma > 0.0)) throw InvalidSigma("sigma must be positive");
    if (dim < 1) throw InvalidSigma("dimension must be >= 1");
    double inv = 1.0 / (sigma * sigma);
    return FisherInformation{inv, 2.0 * static_cast<double>(dim) * inv};
}

/// Fisher-Rao speed of the schedule path at one point:
/// v = sqrt(A^2 alpha'^2 + 2n sigma'^2) / sigma.
inline double path_speed(const SchedulePoint& p, double norm_a, int dim) {
    double a = norm_a * p.dalpha;
    double s2 = 2.0 * static_cast<double>(dim) * p.dsigma * p.dsigma;
    return std::sqrt(a * a + s2) / p.sigma;
}

/// Conserved alpha-momentum p_alpha = (A^2/sigma^2) alpha'.
inline double momentum_alpha(const SchedulePoint& p, double norm_a) {
    return norm_a * norm_a * p.dalpha / (p.sigma * p.sigma);
}

/// Composite Simpson rule over [a, b]; intervals is rounded up to even.
template <typename F>
double simpson(F&& f, double a, double b, int intervals) {
    if (intervals < 2) intervals = 2;
    if (intervals % 2 != 0) ++intervals;
    const double h = (b - a) / intervals;
    double odd = 0.0, even = 0.0;
    for (int i = 1; i < intervals; i += 2) odd += f(a + h * i);
    for (int i = 2; i < intervals; i += 2) even += f(a + h * i);
    return h / 3.0 * (f(a) + f(b) + 4.0 * odd + 2.0 * even);
}

/// Path length l = integral of v(t) dt over [t_lo, t_hi].
///
/// Kinds whose sigma vanishes at t = 0 (linear-beta, cosine) have infinite
/// Fisher-Rao length from exactly zero; diagnose them on a clipped domain.
template <ScheduleLike S>
double path_length(const S& schedule, double norm_a, int dim, int quadrature_points,
                   double t_lo = 0.0, double t_hi = 1.0) {
    if (quadrature_points < 16) throw OutOfRange("quadrature_points must be >= 16");
    return simpson([&](double t) { return path_speed(schedule.at(t), norm_a, dim); },
                   t_lo, t_hi, quadrature_points);
}

/// Kinetic energy E = 1/2 integral of v(t)^2 dt.
template <ScheduleLike S>
double path_energy(const S& schedule, double norm_a, int dim, int quadrature_points,
                   double t_lo = 0.0, double t_hi = 1.0) {
    if (quadrature_points < 16) throw OutOfRange("quadrature_points must be >= 16");
    return 0.5 * simpson(
                     [&](double t) {
                         double v = path_speed(schedule.at(t), norm_a, dim);
                         return v * v;
                     },
                     t_lo, t_hi, quadrature_points);
}

/// Speed samples, length, energy, momentum trace and the two conservation
/// summaries (speed_cv, momentum_spread) for one schedule.
struct PathDiagnostics {
    std::string kind;
    std::vector<std::pair<double, double>> speeds;            // (t, v)
    std::vector<std::pair<double, double>> momentum_samples;  // (t, p_alpha)
    double length = 0.0;
    double energy = 0.0;
    double speed_cv = 0.0;
    double momentum_spread = 0.0;
    double energy_over_half_length_sq = 0.0;
};

inline constexpr int kDefaultQuadratureIntervals = 4096;

template <ScheduleLike S>
PathDiagnostics diagnose_path(const S& schedule, const std::string& kind, double norm_a, int dim,
                              int samples, int quadrature_points = kDefaultQuadratureIntervals,
                              double t_lo = 0.0, double t_hi = 1.0) {
    if (samples < 16) throw OutOfRange("samples must be >= 16");
    if (!(t_hi > t_lo)) throw OutOfRange("t_hi must exceed t_lo");

    PathDiagnostics d;
    d.kind = kind;
    d.speeds.reserve(samples);
    d.momentum_samples.reserve(samples);

    double v_sum = 0.0, v_sq_sum = 0.0;
    double p_min = 0.0, p_max = 0.0, p_sum = 0.0;
    for (int i = 0; i < samples; ++i) {
        double t = t_lo + (t_hi - t_lo) * static_cast<double>(i) / (samples - 1);
        SchedulePoint point = schedule.at(t);
        double v = path_speed(point, norm_a, dim);
        double p = momentum_alpha(point, norm_a);
        d.speeds.emplace_back(t, v);
        d.momentum_samples.emplace_back(t, p);
        v_sum += v;
        v_sq_sum += v * v;
        p_sum += p;
        if (i == 0) {
            p_min = p_max = p;
        } else {
            p_min = std::min(p_min, p);
            p_max = std::max(p_max, p);
        }
    }

    double v_mean = v_sum / samples;
    double v_var = std::max(0.0, v_sq_sum / samples - v_mean * v_mean);
    d.speed_cv = (v_mean > 0.0) ? std::sqrt(v_var) / v_mean : 0.0;

    double p_mean = p_sum / samples;
    double spread = p_max - p_min;
    d.momentum_spread = (std::abs(p_mean) > 1e-12) ? spread / std::abs(p_mean) : spread;

    d.length = path_length(schedule, norm_a, dim, quadrature_points, t_lo, t_hi);
    d.energy = path_energy(schedule, norm_a, dim, quadrature_points, t_lo, t_hi);
    double half_len_sq = 0.5 * d.length * d.length;
    d.energy_over_half_length_sq = (half_len_sq > 0.0) ? d.energy / half_len_sq : 1.0;
    return d;
}

/// Energy comparisons are endpoint-relative; refuse them otherwise.
template <ScheduleLike A, ScheduleLike B>
void require_matched_endpoints(const A& a, const B& b, double rel_tol = 1e-9,
                               double t_lo = 0.0, double t_hi = 1.0) {
    auto close = [rel_tol](double x, double y) {
        double scale = std::max({std::abs(x), std::abs(y), 1e-300});
        return std::abs(x - y) <= rel_tol * scale;
    };
    for (double t : {t_lo, t_hi}) {
        SchedulePoint pa = a.at(t);
        SchedulePoint pb = b.at(t);
        if (!close(pa.alpha, pb.alpha) || !close(pa.sigma, pb.sigma))
            throw EndpointMismatch("schedules do not share endpoints; energy/length comparison refused");
    }
}

} // namespace gdm
