#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "gdm/errors.hpp"

namespace gdm {

/// Endpoint pairs (alpha0, sigma0) at t=0 and (alpha1, sigma1) at t=1.
struct BoundaryConditions {
    double alpha0 = 1.0;
    double sigma0 = 0.002;
    double alpha1 = 1.0;
    double sigma1 = 80.0;

    /// Throws InvalidBoundary unless sigma1 > sigma0 > 0, alpha0 >= alpha1 > 0
    /// and the terminal SNR is below the initial one.
    void validate() const {
        if (!(sigma0 > 0.0)) throw InvalidBoundary("sigma0 must be positive");
        if (!(sigma1 > sigma0)) throw InvalidBoundary("sigma1 must exceed sigma0");
        if (!(alpha0 > 0.0) || !(alpha1 > 0.0))
            throw InvalidBoundary("alpha0 and alpha1 must be positive");
        if (alpha1 > alpha0) throw InvalidBoundary("alpha1 must not exceed alpha0");
        double snr0 = (alpha0 / sigma0) * (alpha0 / sigma0);
        double snr1 = (alpha1 / sigma1) * (alpha1 / sigma1);
        if (!(snr1 < snr0)) throw InvalidBoundary("SNR(1) must be below SNR(0)");
    }
};

/// Solved constants of the closed-form geodesic scheduler.
///
/// norm_a is the data-anchor norm A = ||x0||, dim is the data dimension n.
/// r, theta0 and delta fully determine sigma(t) = A r sech(theta0 - delta t).
struct GeodesicParams {
    double norm_a = 0.0;
    int dim = 0;
    double r = 0.0;
    double theta0 = 0.0;
    double delta = 0.0;
};

/// One schedule evaluation: (t, alpha, sigma) plus the analytic derivatives.
struct SchedulePoint {
    double t = 0.0;
    double alpha = 1.0;
    double sigma = 0.0;
    double dalpha = 0.0;
    double dsigma = 0.0;
};

/// Signal-to-noise ratio alpha^2 / sigma^2. Returns +inf at sigma == 0
/// (the linear-beta and cosine baselines start noiseless).
inline double snr(const SchedulePoint& p) {
    if (p.sigma == 0.0) return std::numeric_limits<double>::infinity();
    double q = p.alpha / p.sigma;
    return q * q;
}

namespace detail {

inline void check_unit_time(double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw OutOfRange("t must lie in [0,1]");
}

} // namespace detail

/// Default degeneracy tolerance: |alpha0 - alpha1| <= tol * alpha0 routes to
/// the exponential special case (the closed-form solve divides by the gap).
inline constexpr double kDegenerateAlphaTol = 1e-8;

/// Solves Ar, theta0 and delta so that the sech/tanh closed form hits the
/// boundary conditions exactly.
///
/// The solve works from the identity
///   A(alpha0-alpha1)/sqrt(2n) = sqrt(lambda^2-sigma0^2) - sqrt(lambda^2-sigma1^2),
/// which gives lambda = A r without the catastrophic cancellation the expanded
/// closed form suffers when sigma1 >> sigma0.
///
/// Boundary pairs whose sech apex would fall inside [0,1] (sigma overshooting
/// sigma1 mid-path) are rejected as InvalidBoundary: such paths cannot keep
/// the SNR monotone, which every schedule consumer assumes.
inline GeodesicParams solve_geodesic_params(const BoundaryConditions& bc, double norm_a, int dim) {
    bc.validate();
    if (!(norm_a > 0.0)) throw InvalidBoundary("data anchor norm A must be positive");
    if (dim < 1) throw InvalidBoundary("data dimension must be >= 1");

    const double gap = bc.alpha0 - bc.alpha1;
    if (std::abs(gap) <= kDegenerateAlphaTol * bc.alpha0)
        throw DegenerateAlpha("alpha0 == alpha1 up to tolerance; use the exponential schedule");

    const double root2n = std::sqrt(2.0 * static_cast<double>(dim));
    const double m = norm_a * gap / root2n;
    const double span = (bc.sigma1 - bc.sigma0) * (bc.sigma1 + bc.sigma0);
    if (span <= m * m)
        throw InvalidBoundary("alpha drop too large for the sigma span: "
                              "geodesic would overshoot sigma1 (non-monotone SNR)");

    const double p = (span + m * m) / (2.0 * m); // sqrt(lambda^2 - sigma0^2)
    const double lambda = std::hypot(p, bc.sigma0);

    const double arg0 = lambda / bc.sigma0;
    const double arg1 = lambda / bc.sigma1;
    if (arg0 < 1.0 || arg1 < 1.0)
        throw InvalidBoundary("arcosh argument below 1 after solving");

    GeodesicParams params;
    params.norm_a = norm_a;
    params.dim = dim;
    params.r = lambda / norm_a;
    params.theta0 = std::acosh(arg0);
    params.delta = params.theta0 - std::acosh(arg1);
    return params;
}

/// Closed-form geodesic evaluation.
///
///   sigma(t) = A r sech(theta0 - delta t)
///   alpha(t) = alpha0 - r sqrt(2n) [tanh theta0 - tanh(theta0 - delta t)]
///
/// The tanh difference is computed through the identity
/// tanh a - tanh b = sinh(a-b) / (cosh a cosh b) with cosh theta0 = A r/sigma0,
/// so no precision is lost when both angles are large.
inline SchedulePoint eval_geodesic(const GeodesicParams& params, const BoundaryConditions& bc, double t) {
    detail::check_unit_time(t);
    const double lambda = params.norm_a * params.r;
    const double root2n = std::sqrt(2.0 * static_cast<double>(params.dim));
    const double theta = params.theta0 - params.delta * t;

    SchedulePoint p;
    p.t = t;
    p.sigma = lambda / std::cosh(theta);
    p.alpha = bc.alpha0 -
              root2n * bc.sigma0 * p.sigma * std::sinh(params.delta * t) / (params.norm_a * lambda);
    p.dsigma = params.delta * p.sigma * std::tanh(theta);
    p.dalpha = -params.delta * root2n * p.sigma * p.sigma / (params.norm_a * lambda);
    return p;
}

/// Variance-exploding exponential schedule, the degenerate (alpha0 == alpha1)
/// geodesic: alpha == 1, sigma(t) = sigma0 (sigma1/sigma0)^t.
inline SchedulePoint eval_exponential_ve(double sigma0, double sigma1, double t) {
    if (!(sigma0 > 0.0) || !(sigma1 > sigma0))
        throw InvalidBoundary("exponential schedule needs 0 < sigma0 < sigma1");
    detail::check_unit_time(t);
    const double rate = std::log(sigma1 / sigma0);
    SchedulePoint p;
    p.t = t;
    p.alpha = 1.0;
    p.dalpha = 0.0;
    p.sigma = sigma0 * std::exp(rate * t);
    p.dsigma = p.sigma * rate;
    return p;
}

/// Straight-line sigma with alpha pinned at 1; the non-geodesic contrast path
/// used by the energy comparisons and the training-efficiency study.
inline SchedulePoint eval_linear_sigma(double sigma0, double sigma1, double t) {
    if (!(sigma0 > 0.0) || !(sigma1 > sigma0))
        throw InvalidBoundary("linear-sigma schedule needs 0 < sigma0 < sigma1");
    detail::check_unit_time(t);
    SchedulePoint p;
    p.t = t;
    p.alpha = 1.0;
    p.dalpha = 0.0;
    p.sigma = sigma0 + (sigma1 - sigma0) * t;
    p.dsigma = sigma1 - sigma0;
    return p;
}

/// DDPM linear-beta baseline rescaled to continuous time:
/// beta(t) = beta_lo + (beta_hi - beta_lo) t, alpha = exp(-integral beta / 2),
/// sigma = sqrt(1 - alpha^2). Starts exactly noiseless (sigma(0) = 0, so
/// dsigma(0) = +inf by the closed form).
inline SchedulePoint eval_linear_beta(double beta_lo, double beta_hi, double t) {
    detail::check_unit_time(t);
    const double beta = beta_lo + (beta_hi - beta_lo) * t;
    const double integral = beta_lo * t + 0.5 * (beta_hi - beta_lo) * t * t;
    SchedulePoint p;
    p.t = t;
    p.alpha = std::exp(-0.5 * integral);
    p.dalpha = -0.5 * beta * p.alpha;
    p.sigma = std::sqrt(std::max(0.0, 1.0 - p.alpha * p.alpha));
    p.dsigma = (p.sigma > 0.0) ? (p.alpha * p.alpha * beta / (2.0 * p.sigma))
                               : std::numeric_limits<double>::infinity();
    return p;
}

/// Cosine baseline with offset s, normalised so alpha(0) = 1:
/// alpha(t) = cos(phi(t)) / cos(phi(0)), phi(t) = pi/2 (t+s)/(1+s).
inline SchedulePoint eval_cosine_alpha(double offset, double t) {
    detail::check_unit_time(t);
    constexpr double kHalfPi = 1.57079632679489661923;
    const double scale = kHalfPi / (1.0 + offset);
    const double phi = scale * (t + offset);
    const double norm = std::cos(scale * offset);
    SchedulePoint p;
    p.t = t;
    p.alpha = (t >= 1.0) ? 0.0 : std::cos(phi) / norm;
    p.dalpha = -scale * std::sin(phi) / norm;
    p.sigma = (t <= 0.0) ? 0.0 : std::sqrt(std::max(0.0, 1.0 - p.alpha * p.alpha));
    if (p.sigma > 0.0)
        p.dsigma = -p.alpha * p.dalpha / p.sigma;
    else
        p.dsigma = std::numeric_limits<double>::infinity();
    return p;
}

enum class ScheduleKind {
    geodesic,
    exponential_ve,
    linear_sigma,
    linear_beta,
    cosine_alpha,
};

inline const char* kind_name(ScheduleKind kind) {
    switch (kind) {
        case ScheduleKind::geodesic: return "geodesic";
        case ScheduleKind::exponential_ve: return "exponential_ve";
        case ScheduleKind::linear_sigma: return "linear_sigma";
        case ScheduleKind::linear_beta: return "linear_beta";
        case ScheduleKind::cosine_alpha: return "cosine_alpha";
    }
    return "unknown";
}

/// Value-type schedule: one of the shipped kinds plus its parameters.
/// Immutable after construction; evaluation is pure.
class Schedule {
public:
    static Schedule geodesic(const BoundaryConditions& bc, double norm_a, int dim) {
        Schedule s;
        s.kind_ = ScheduleKind::geodesic;
        s.bc_ = bc;
        s.params_ = solve_geodesic_params(bc, norm_a, dim);
        return s;
    }

    static Schedule exponential_ve(double sigma0, double sigma1) {
        if (!(sigma0 > 0.0) || !(sigma1 > sigma0))
            throw InvalidBoundary("exponential schedule needs 0 < sigma0 < sigma1");
        Schedule s;
        s.kind_ = ScheduleKind::exponential_ve;
        s.bc_ = BoundaryConditions{1.0, sigma0, 1.0, sigma1};
        return s;
    }

    static Schedule linear_sigma(double sigma0, double sigma1) {
        if (!(sigma0 > 0.0) || !(sigma1 > sigma0))
            throw InvalidBoundary("linear-sigma schedule needs 0 < sigma0 < sigma1");
        Schedule s;
        s.kind_ = ScheduleKind::linear_sigma;
        s.bc_ = BoundaryConditions{1.0, sigma0, 1.0, sigma1};
        return s;
    }

    static Schedule linear_beta(double beta_lo = 0.1, double beta_hi = 20.0) {
        if (!(beta_lo > 0.0) || !(beta_hi > beta_lo))
            throw InvalidBoundary("linear-beta schedule needs 0 < beta_lo < beta_hi");
        Schedule s;
        s.kind_ = ScheduleKind::linear_beta;
        s.beta_lo_ = beta_lo;
        s.beta_hi_ = beta_hi;
        return s;
    }

    static Schedule cosine_alpha(double offset = 0.008) {
        if (!(offset > 0.0)) throw InvalidBoundary("cosine offset must be positive");
        Schedule s;
        s.kind_ = ScheduleKind::cosine_alpha;
        s.cosine_offset_ = offset;
        return s;
    }

    ScheduleKind kind() const { return kind_; }
    const char* name() const { return kind_name(kind_); }
    const BoundaryConditions& boundary() const { return bc_; }
    const GeodesicParams& geodesic_params() const { return params_; }

    SchedulePoint at(double t) const {
        switch (kind_) {
            case ScheduleKind::geodesic: return eval_geodesic(params_, bc_, t);
            case ScheduleKind::exponential_ve: return eval_exponential_ve(bc_.sigma0, bc_.sigma1, t);
            case ScheduleKind::linear_sigma: return eval_linear_sigma(bc_.sigma0, bc_.sigma1, t);
            case ScheduleKind::linear_beta: return eval_linear_beta(beta_lo_, beta_hi_, t);
            case ScheduleKind::cosine_alpha: return eval_cosine_alpha(cosine_offset_, t);
        }
        throw Error("unreachable schedule kind");
    }

    /// sigma(t)/alpha(t), the inverse square-root SNR. +inf where alpha == 0.
    double ratio(double t) const {
        SchedulePoint p = at(t);
        if (p.alpha == 0.0) return std::numeric_limits<double>::infinity();
        return p.sigma / p.alpha;
    }

private:
    Schedule() = default;

    ScheduleKind kind_ = ScheduleKind::exponential_ve;
    BoundaryConditions bc_{};
    GeodesicParams params_{};
    double beta_lo_ = 0.1;
    double beta_hi_ = 20.0;
    double cosine_offset_ = 0.008;
};

template <typename S>
concept ScheduleLike = requires(const S& s, double t) {
    { s.at(t) } -> std::convertible_to<SchedulePoint>;
};

/// Finds t with sigma(t)/alpha(t) == ratio by bisection on the monotone ratio
/// function. One code path serves every schedule kind.
template <ScheduleLike S>
double invert_noise_ratio(const S& schedule, double target) {
    auto ratio_at = [&](double t) {
        SchedulePoint p = schedule.at(t);
        if (p.alpha == 0.0) return std::numeric_limits<double>::infinity();
        return p.sigma / p.alpha;
    };
    const double lo = ratio_at(0.0);
    const double hi = ratio_at(1.0);
    // Endpoint comparisons allow a few ulps so that e.g. the exact terminal
    // ratio is accepted even when sigma(1) rounds a hair below sigma1.
    if (target <= lo * (1.0 + 1e-12)) {
        if (target >= lo * (1.0 - 1e-12)) return 0.0;
        throw OutOfRange("ratio outside the schedule's attainable sigma/alpha span");
    }
    if (target >= hi * (1.0 - 1e-12)) {
        if (target <= hi * (1.0 + 1e-12)) return 1.0;
        throw OutOfRange("ratio outside the schedule's attainable sigma/alpha span");
    }

    double a = 0.0, b = 1.0;
    for (int iter = 0; iter < 200 && b - a > 0.0; ++iter) {
        double mid = 0.5 * (a + b);
        if (ratio_at(mid) < target)
            a = mid;
        else
            b = mid;
    }
    return 0.5 * (a + b);
}

/// Uniform t-grid of schedule points, the data behind the schedule-family plot.
template <ScheduleLike S>
std::vector<SchedulePoint> schedule_table(const S& schedule, int grid_size) {
    if (grid_size < 2) throw OutOfRange("grid_size must be >= 2");
    std::vector<SchedulePoint> rows;
    rows.reserve(static_cast<std::size_t>(grid_size));
    for (int i = 0; i < grid_size; ++i) {
        double t = static_cast<double>(i) / static_cast<double>(grid_size - 1);
        rows.push_back(schedule.at(t));
    }
    return rows;
}

/// CSV emission, 17 significant digits per value.
inline void write_schedule_csv(std::ostream& os, const std::vector<SchedulePoint>& rows) {
    os << "t,alpha,sigma,dalpha,dsigma,snr\n";
    char line[256];
    for (const auto& p : rows) {
        std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      p.t, p.alpha, p.sigma, p.dalpha, p.dsigma, snr(p));
        os << line;
    }
}

} // namespace gdm
