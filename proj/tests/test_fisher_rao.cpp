#include "doctest.h"

#include <cmath>

#include "gdm/fisher_rao.hpp"
#include "gdm/schedule.hpp"

using namespace gdm;

namespace {

double rel_err(double got, double want) {
    double scale = std::max({std::abs(got), std::abs(want), 1e-300});
    return std::abs(got - want) / scale;
}

// Flat path: sigma and alpha constant, derivatives zero.
struct ConstSchedule {
    double alpha, sigma;
    SchedulePoint at(double t) const { return {t, alpha, sigma, 0.0, 0.0}; }
};

} // namespace

TEST_CASE("fisher_information diagonal scales") {
    auto fi = fisher_information(1.0, 1);
    CHECK(fi.mean_scale == 1.0);
    CHECK(fi.sigma_scale == 2.0);

    fi = fisher_information(2.0, 1);
    CHECK(fi.mean_scale == 0.25);
    CHECK(fi.sigma_scale == 0.5);

    fi = fisher_information(1.0, 100);
    CHECK(fi.mean_scale == 1.0);
    CHECK(fi.sigma_scale == 200.0);

    CHECK_THROWS_AS(fisher_information(0.0, 1), InvalidSigma);
    CHECK_THROWS_AS(fisher_information(-1.0, 1), InvalidSigma);
}

TEST_CASE("path_speed closed forms") {
    // Exponential schedule has constant speed sqrt(2n) log(sigma1/sigma0).
    Schedule exp = Schedule::exponential_ve(0.002, 80.0);
    const int n = 4;
    double want = std::sqrt(2.0 * n) * std::log(80.0 / 0.002);
    for (double t : {0.0, 0.25, 0.5, 0.99}) {
        CHECK(rel_err(path_speed(exp.at(t), 1.0, n), want) <= 1e-12);
    }

    // Stationary point has zero speed.
    CHECK(path_speed(SchedulePoint{0.5, 1.0, 2.0, 0.0, 0.0}, 3.0, 7) == 0.0);

    // Solved geodesic: speed constant to tiny relative spread.
    Schedule geo = Schedule::geodesic({1.0, 0.002, 0.5, 40.0}, 2.0, 4);
    double v0 = path_speed(geo.at(0.0), 2.0, 4);
    double lo = v0, hi = v0;
    for (int i = 1; i < 100; ++i) {
        double v = path_speed(geo.at(i / 99.0), 2.0, 4);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK((hi - lo) / v0 <= 1e-6);
}

TEST_CASE("simpson integrates polynomials exactly and converges") {
    CHECK(rel_err(simpson([](double x) { return x * x * x; }, 0.0, 2.0, 16), 4.0) <= 1e-14);
    double got = simpson([](double x) { return std::sin(x); }, 0.0, 3.14159265358979323846, 1024);
    CHECK(rel_err(got, 2.0) <= 1e-10);
}

TEST_CASE("path_length closed forms") {
    // sqrt(2) * log(40000) for the unit-dimension exponential schedule.
    Schedule exp = Schedule::exponential_ve(0.002, 80.0);
    double want = std::sqrt(2.0) * std::log(40000.0);
    CHECK(rel_err(path_length(exp, 1.0, 1, 4096), want) <= 1e-10);
    CHECK(want == doctest::Approx(14.9858).epsilon(1e-4));

    // Flat path has zero length and energy.
    ConstSchedule flat{1.0, 0.7};
    CHECK(path_length(flat, 1.0, 4, 64) == 0.0);
    CHECK(path_energy(flat, 1.0, 4, 64) == 0.0);

    // Length is parameterisation-free: linear-in-sigma and exponential paths
    // through the same endpoints traverse the same image.
    Schedule exp_mid = Schedule::exponential_ve(0.5, 5.0);
    Schedule lin_mid = Schedule::linear_sigma(0.5, 5.0);
    double l_exp = path_length(exp_mid, 1.0, 4, 4096);
    double l_lin = path_length(lin_mid, 1.0, 4, 4096);
    CHECK(rel_err(l_exp, l_lin) <= 1e-8);
    CHECK(rel_err(l_exp, std::sqrt(8.0) * std::log(10.0)) <= 1e-10);

    CHECK_THROWS_AS(path_length(exp, 1.0, 1, 8), OutOfRange);
}

TEST_CASE("path_energy: equality at constant speed, strict excess otherwise") {
    const int n = 4;
    Schedule exp = Schedule::exponential_ve(0.5, 5.0);
    double l = path_length(exp, 1.0, n, 4096);
    double e = path_energy(exp, 1.0, n, 4096);
    CHECK(rel_err(e, 0.5 * l * l) <= 1e-8);

    Schedule lin = Schedule::linear_sigma(0.5, 5.0);
    double e_lin = path_energy(lin, 1.0, n, 4096);
    double l_lin = path_length(lin, 1.0, n, 4096);
    // Closed form: E = n (sigma1-sigma0)^2 / (sigma0 sigma1).
    CHECK(rel_err(e_lin, n * 4.5 * 4.5 / (0.5 * 5.0)) <= 1e-8);
    CHECK(e_lin > 0.5 * l_lin * l_lin * 1.01);
}

TEST_CASE("momentum_alpha closed forms and conservation") {
    Schedule exp = Schedule::exponential_ve(0.002, 80.0);
    CHECK(momentum_alpha(exp.at(0.3), 5.0) == 0.0);

    CHECK(momentum_alpha(SchedulePoint{0.0, 1.0, 1.0, -1.0, 0.0}, 2.0) == -4.0);

    Schedule geo = Schedule::geodesic({1.0, 0.002, 0.5, 40.0}, 2.0, 4);
    double p0 = momentum_alpha(geo.at(0.0), 2.0);
    double lo = p0, hi = p0;
    for (int i = 1; i < 100; ++i) {
        double p = momentum_alpha(geo.at(i / 99.0), 2.0);
        lo = std::min(lo, p);
        hi = std::max(hi, p);
    }
    CHECK(p0 < 0.0); // alpha decreases
    CHECK((hi - lo) / std::abs(p0) <= 1e-8);
}

TEST_CASE("property: constant speed along solved geodesics to 1e-8") {
    for (auto [sigma1, alpha1] : {std::pair{72.0, 0.9}, {40.0, 0.5}, {1.0, 0.0125}}) {
        Schedule geo = Schedule::geodesic({1.0, 0.002, alpha1, sigma1}, 16.0, 256);
        double v0sq = 0.0, lo = 0.0, hi = 0.0;
        for (int i = 0; i < 100; ++i) {
            SchedulePoint p = geo.at(i / 99.0);
            double a = 16.0 * p.dalpha;
            double vsq = (a * a + 512.0 * p.dsigma * p.dsigma) / (p.sigma * p.sigma);
            if (i == 0) {
                v0sq = lo = hi = vsq;
            } else {
                lo = std::min(lo, vsq);
                hi = std::max(hi, vsq);
            }
        }
        CHECK((hi - lo) / v0sq <= 1e-8);
    }
}

TEST_CASE("diagnose_path summarises the conservation laws") {
    Schedule geo = Schedule::geodesic({1.0, 0.002, 0.5, 40.0}, 2.0, 4);
    PathDiagnostics d = diagnose_path(geo, "geodesic", 2.0, 4, 100);
    CHECK(d.speed_cv <= 1e-6);
    CHECK(d.momentum_spread <= 1e-8);
    CHECK(rel_err(d.energy, 0.5 * d.length * d.length) <= 1e-7);
    CHECK(d.speeds.size() == 100);
    CHECK(d.momentum_samples.size() == 100);
    CHECK(d.length >= 0.0);

    // The variance-preserving baseline is far from constant speed. Its sigma
    // vanishes at t=0, so diagnostics run on a clipped domain.
    Schedule lb = Schedule::linear_beta();
    PathDiagnostics b = diagnose_path(lb, "linear_beta", 2.0, 4, 100, 4096, 0.05, 1.0);
    CHECK(b.speed_cv > 0.01);
    CHECK(b.energy >= 0.5 * b.length * b.length - 1e-8);
    CHECK(b.energy > 0.5 * b.length * b.length);
}

TEST_CASE("property: energy-length bound holds for every kind") {
    struct Case {
        Schedule s;
        double t_lo;
    };
    const Case cases[] = {
        {Schedule::geodesic({1.0, 0.002, 0.5, 40.0}, 2.0, 4), 0.0},
        {Schedule::exponential_ve(0.002, 80.0), 0.0},
        {Schedule::linear_sigma(0.002, 80.0), 0.0},
        {Schedule::linear_beta(), 0.05},
        {Schedule::cosine_alpha(), 0.05},
    };
    for (const auto& c : cases) {
        double l = path_length(c.s, 2.0, 4, 4096, c.t_lo, 1.0);
        double e = path_energy(c.s, 2.0, 4, 4096, c.t_lo, 1.0);
        CHECK(e >= 0.5 * l * l - 1e-8);
    }
}

TEST_CASE("property: quadrature convergence at 4096 intervals") {
    struct Case {
        Schedule s;
        double t_lo;
    };
    const Case cases[] = {
        {Schedule::geodesic({1.0, 0.002, 0.5, 40.0}, 2.0, 4), 0.0},
        {Schedule::exponential_ve(0.002, 80.0), 0.0},
        {Schedule::linear_sigma(0.5, 5.0), 0.0},
        {Schedule::linear_beta(), 0.05},
        {Schedule::cosine_alpha(), 0.05},
    };
    for (const auto& c : cases) {
        double coarse = path_energy(c.s, 2.0, 4, 4096, c.t_lo, 1.0);
        double fine = path_energy(c.s, 2.0, 4, 8192, c.t_lo, 1.0);
        CHECK(rel_err(coarse, fine) <= 1e-8);
    }
}

TEST_CASE("endpoint matching guards comparisons") {
    Schedule exp = Schedule::exponential_ve(0.002, 80.0);
    Schedule lin = Schedule::linear_sigma(0.002, 80.0);
    CHECK_NOTHROW(require_matched_endpoints(exp, lin));

    Schedule other = Schedule::linear_sigma(0.002, 40.0);
    CHECK_THROWS_AS(require_matched_endpoints(exp, other), EndpointMismatch);

    Schedule geo = Schedule::geodesic({1.0, 0.002, 0.5, 40.0}, 2.0, 4);
    CHECK_THROWS_AS(require_matched_endpoints(geo, exp), EndpointMismatch);
}
