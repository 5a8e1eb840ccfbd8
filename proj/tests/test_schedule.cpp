#include "doctest.h"

#include <cmath>
#include <sstream>
#include <vector>

#include "gdm/rng.hpp"
#include "gdm/schedule.hpp"

using namespace gdm;

namespace {

double rel_err(double got, double want) {
    double scale = std::max({std::abs(got), std::abs(want), 1e-300});
    return std::abs(got - want) / scale;
}

// The sech/tanh closed form with the tanh difference written out directly.
// Independent route for cross-checking the stable evaluator on
// well-conditioned inputs.
SchedulePoint eval_geodesic_naive(const GeodesicParams& gp, const BoundaryConditions& bc, double t) {
    double lambda = gp.norm_a * gp.r;
    double root2n = std::sqrt(2.0 * gp.dim);
    double theta = gp.theta0 - gp.delta * t;
    SchedulePoint p;
    p.t = t;
    p.sigma = lambda / std::cosh(theta);
    p.alpha = bc.alpha0 - gp.r * root2n * (std::tanh(gp.theta0) - std::tanh(theta));
    return p;
}

const BoundaryConditions kSpecBc{1.0, 0.002, 0.5, 40.0}; // A=2, n=4 example

} // namespace

TEST_CASE("solve_geodesic_params round-trips the boundary conditions") {
    GeodesicParams gp = solve_geodesic_params(kSpecBc, 2.0, 4);
    CHECK(gp.r > 0.0);
    CHECK(gp.delta > 0.0);

    SchedulePoint p0 = eval_geodesic(gp, kSpecBc, 0.0);
    SchedulePoint p1 = eval_geodesic(gp, kSpecBc, 1.0);
    CHECK(rel_err(p0.sigma, 0.002) <= 1e-12);
    CHECK(rel_err(p0.alpha, 1.0) <= 1e-12);
    CHECK(rel_err(p1.sigma, 40.0) <= 1e-9);
    CHECK(rel_err(p1.alpha, 0.5) <= 1e-9);

    // arcosh arguments stay valid after solving
    CHECK(gp.norm_a * gp.r >= kSpecBc.sigma0);
    CHECK(gp.norm_a * gp.r >= kSpecBc.sigma1);
}

TEST_CASE("solve_geodesic_params rejects degenerate alpha") {
    BoundaryConditions bc{1.0, 0.002, 1.0, 80.0};
    CHECK_THROWS_AS(solve_geodesic_params(bc, 1.0, 4), DegenerateAlpha);
    BoundaryConditions near{1.0, 0.002, 1.0 - 1e-9, 80.0};
    CHECK_THROWS_AS(solve_geodesic_params(near, 1.0, 4), DegenerateAlpha);

    // just above the tolerance the solve is accepted and still round-trips
    BoundaryConditions above{1.0, 0.002, 1.0 - 2e-8, 80.0};
    GeodesicParams gp = solve_geodesic_params(above, 1.0, 4);
    SchedulePoint p1 = eval_geodesic(gp, above, 1.0);
    CHECK(rel_err(p1.alpha, above.alpha1) <= 1e-9);
    CHECK(rel_err(p1.sigma, above.sigma1) <= 1e-9);
}

TEST_CASE("solve_geodesic_params on a standard terminal-parameter row") {
    // (sigma1, alpha1) = (72, 0.9) with unit-RMS anchor A = sqrt(n), n = 256.
    BoundaryConditions bc{1.0, 0.002, 0.9, 72.0};
    GeodesicParams gp = solve_geodesic_params(bc, 16.0, 256);
    CHECK(gp.delta > 0.0);
    SchedulePoint p1 = eval_geodesic(gp, bc, 1.0);
    CHECK(rel_err(p1.sigma, 72.0) <= 1e-9);
    CHECK(rel_err(p1.alpha, 0.9) <= 1e-9);
}

TEST_CASE("solve_geodesic_params rejects an overshooting sigma span") {
    // Large alpha drop over a tiny sigma span: the sech apex would fall inside
    // [0,1] and sigma would overshoot sigma1.
    BoundaryConditions bc{1.0, 0.002, 0.05, 0.02};
    CHECK_THROWS_AS(solve_geodesic_params(bc, 4.0, 16), InvalidBoundary);
}

TEST_CASE("eval_geodesic derivatives match central differences") {
    GeodesicParams gp = solve_geodesic_params(kSpecBc, 2.0, 4);
    Rng rng(7);
    for (int i = 0; i < 20; ++i) {
        double t = rng.uniform(0.05, 0.95);
        double h = 1e-6 * std::max(1.0, std::abs(t));
        SchedulePoint p = eval_geodesic(gp, kSpecBc, t);
        SchedulePoint hi = eval_geodesic(gp, kSpecBc, t + h);
        SchedulePoint lo = eval_geodesic(gp, kSpecBc, t - h);
        // The difference quotient carries rounding noise ~ eps*|f|/h on top of
        // the truncation term, so the comparison is absolute-plus-relative.
        double fd_sigma = (hi.sigma - lo.sigma) / (2 * h);
        double fd_alpha = (hi.alpha - lo.alpha) / (2 * h);
        double noise_sigma = 4e-16 * std::max(hi.sigma, lo.sigma) / h;
        double noise_alpha = 4e-16 * std::max(hi.alpha, lo.alpha) / h;
        CHECK(std::abs(p.dsigma - fd_sigma) <= 1e-5 * std::abs(p.dsigma) + noise_sigma);
        CHECK(std::abs(p.dalpha - fd_alpha) <= 1e-5 * std::abs(p.dalpha) + noise_alpha);
    }
}

TEST_CASE("eval_geodesic agrees with the literal closed form") {
    // Moderate angles so the naive tanh difference is well conditioned.
    BoundaryConditions bc{1.0, 0.2, 0.5, 4.0};
    GeodesicParams gp = solve_geodesic_params(bc, 2.0, 4);
    for (double t : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        SchedulePoint a = eval_geodesic(gp, bc, t);
        SchedulePoint b = eval_geodesic_naive(gp, bc, t);
        CHECK(rel_err(a.sigma, b.sigma) <= 1e-12);
        CHECK(rel_err(a.alpha, b.alpha) <= 1e-11);
    }
}

TEST_CASE("eval_geodesic rejects t outside [0,1]") {
    GeodesicParams gp = solve_geodesic_params(kSpecBc, 2.0, 4);
    CHECK_THROWS_AS(eval_geodesic(gp, kSpecBc, -0.01), OutOfRange);
    CHECK_THROWS_AS(eval_geodesic(gp, kSpecBc, 1.01), OutOfRange);
}

TEST_CASE("exponential schedule hits the geometric-mean midpoint") {
    SchedulePoint mid = eval_exponential_ve(0.002, 80.0, 0.5);
    CHECK(rel_err(mid.sigma, 0.4) <= 1e-12); // sqrt(0.002 * 80)
    CHECK(mid.alpha == 1.0);
    CHECK(mid.dalpha == 0.0);
    CHECK(rel_err(mid.dsigma, mid.sigma * std::log(80.0 / 0.002)) <= 1e-12);

    SchedulePoint p0 = eval_exponential_ve(0.002, 80.0, 0.0);
    CHECK(p0.sigma == 0.002);
    SchedulePoint p1 = eval_exponential_ve(0.002, 80.0, 1.0);
    CHECK(rel_err(p1.sigma, 80.0) <= 1e-12);

    CHECK_THROWS_AS(eval_exponential_ve(0.0, 80.0, 0.5), InvalidBoundary);
    CHECK_THROWS_AS(eval_exponential_ve(0.2, 0.1, 0.5), InvalidBoundary);
}

TEST_CASE("baseline schedules start noiseless and end noise dominated") {
    SchedulePoint lb0 = eval_linear_beta(0.1, 20.0, 0.0);
    CHECK(lb0.alpha == 1.0);
    CHECK(lb0.sigma == 0.0);

    SchedulePoint lb1 = eval_linear_beta(0.1, 20.0, 1.0);
    CHECK(snr(lb1) < 1e-4);

    SchedulePoint ca0 = eval_cosine_alpha(0.008, 0.0);
    CHECK(rel_err(ca0.alpha, 1.0) <= 1e-15);
    SchedulePoint ca1 = eval_cosine_alpha(0.008, 1.0);
    CHECK(ca1.alpha == 0.0);
    CHECK(rel_err(ca1.sigma, 1.0) <= 1e-12);
}

TEST_CASE("snr identities") {
    CHECK(rel_err(snr({0.0, 1.0, 0.002, 0, 0}), 250000.0) <= 1e-15);
    CHECK(rel_err(snr({1.0, 1.0, 80.0, 0, 0}), 1.0 / 6400.0) <= 1e-15);
    CHECK(rel_err(snr({1.0, 0.5, 40.0, 0, 0}), 1.0 / 6400.0) <= 1e-15);
}

TEST_CASE("invert_noise_ratio matches the logarithm identity") {
    Schedule s = Schedule::exponential_ve(0.002, 80.0);
    double expected = std::log(3.0 / 0.002) / std::log(80.0 / 0.002);
    CHECK(std::abs(invert_noise_ratio(s, 3.0) - expected) <= 1e-10);
    CHECK(invert_noise_ratio(s, 80.0) == 1.0);
    CHECK(invert_noise_ratio(s, 0.002) == 0.0);
    CHECK_THROWS_AS(invert_noise_ratio(s, 81.0), OutOfRange);
    CHECK_THROWS_AS(invert_noise_ratio(s, 0.001), OutOfRange);
}

TEST_CASE("invert_noise_ratio on the geodesic agrees with a bisected oracle") {
    Schedule s = Schedule::geodesic(kSpecBc, 2.0, 4);
    for (double ratio : {0.01, 0.5, 3.0, 50.0}) {
        double t = invert_noise_ratio(s, ratio);
        CHECK(std::abs(s.ratio(t) - ratio) <= 1e-10);
    }
}

TEST_CASE("schedule_table covers the standard terminal-parameter family") {
    // (sigma1, alpha1) rows, all sharing SNR(0)=250000 and SNR(1)=1/6400.
    const std::vector<std::pair<double, double>> rows = {
        {80.0, 1.0}, {72.0, 0.9}, {56.0, 0.7}, {40.0, 0.5},
        {24.0, 0.3}, {8.0, 0.1},  {1.0, 0.0125}};
    const int n = 256;
    const double a = 16.0; // sqrt(n)
    for (auto [sigma1, alpha1] : rows) {
        Schedule s = (alpha1 == 1.0)
                         ? Schedule::exponential_ve(0.002, sigma1)
                         : Schedule::geodesic({1.0, 0.002, alpha1, sigma1}, a, n);
        auto table = schedule_table(s, 65);
        CHECK(rel_err(snr(table.front()), 250000.0) <= 1e-9);
        CHECK(rel_err(snr(table.back()), 1.0 / 6400.0) <= 1e-7);
        for (std::size_t i = 1; i < table.size(); ++i) {
            double prev = table[i - 1].sigma / table[i - 1].alpha;
            double curr = table[i].sigma / table[i].alpha;
            CHECK(curr > prev);
        }
    }
}

TEST_CASE("schedule_table degenerate grid returns the two boundary points") {
    Schedule s = Schedule::exponential_ve(0.002, 80.0);
    auto table = schedule_table(s, 2);
    REQUIRE(table.size() == 2);
    CHECK(table[0].t == 0.0);
    CHECK(table[1].t == 1.0);
    CHECK_THROWS_AS(schedule_table(s, 1), OutOfRange);
}

TEST_CASE("schedule CSV carries the documented header") {
    Schedule s = Schedule::exponential_ve(0.002, 80.0);
    std::ostringstream os;
    write_schedule_csv(os, schedule_table(s, 3));
    std::string text = os.str();
    CHECK(text.rfind("t,alpha,sigma,dalpha,dsigma,snr\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 4);
}

TEST_CASE("property: boundary round-trip over random valid boundary conditions") {
    Rng rng(11);
    const int dims[] = {1, 2, 4, 16, 64, 256};
    int solved = 0, rejected = 0;
    while (solved < 400) {
        double sigma0 = std::exp(rng.uniform(std::log(1e-3), std::log(0.2)));
        double ratio = std::exp(rng.uniform(std::log(10.0), std::log(1e5)));
        double alpha1 = rng.uniform(0.05, 0.95);
        int n = dims[rng.below(6)];
        BoundaryConditions bc{1.0, sigma0, alpha1, sigma0 * ratio};
        GeodesicParams gp;
        try {
            gp = solve_geodesic_params(bc, std::sqrt(double(n)), n);
        } catch (const InvalidBoundary&) {
            ++rejected; // apex inside the interval; not solvable by this family
            continue;
        }
        ++solved;
        SchedulePoint p0 = eval_geodesic(gp, bc, 0.0);
        SchedulePoint p1 = eval_geodesic(gp, bc, 1.0);
        CHECK(rel_err(p0.alpha, bc.alpha0) <= 1e-9);
        CHECK(rel_err(p0.sigma, bc.sigma0) <= 1e-9);
        CHECK(rel_err(p1.alpha, bc.alpha1) <= 1e-9);
        CHECK(rel_err(p1.sigma, bc.sigma1) <= 1e-9);
        CHECK(gp.norm_a * gp.r * (1 + 1e-12) >= bc.sigma0);
        CHECK(gp.norm_a * gp.r * (1 + 1e-12) >= bc.sigma1);
    }
    CHECK(rejected < solved); // solvable regime dominates the generator
}

TEST_CASE("property: SNR is strictly decreasing on a 1024-point grid for every kind") {
    std::vector<Schedule> kinds = {
        Schedule::geodesic(kSpecBc, 2.0, 4),
        Schedule::exponential_ve(0.002, 80.0),
        Schedule::linear_sigma(0.002, 80.0),
        Schedule::linear_beta(),
        Schedule::cosine_alpha(),
    };
    for (const auto& s : kinds) {
        auto table = schedule_table(s, 1024);
        for (std::size_t i = 1; i < table.size(); ++i) {
            CHECK(snr(table[i]) < snr(table[i - 1]));
        }
    }
}

TEST_CASE("property: near-degenerate geodesic collapses to the exponential schedule") {
    const double eps = 1e-6;
    BoundaryConditions bc{1.0, 0.002, 1.0 - eps, 80.0};
    GeodesicParams gp = solve_geodesic_params(bc, 4.0, 16);
    for (int i = 0; i <= 64; ++i) {
        double t = i / 64.0;
        SchedulePoint geo = eval_geodesic(gp, bc, t);
        SchedulePoint exp = eval_exponential_ve(0.002, 80.0, t);
        CHECK(rel_err(geo.sigma, exp.sigma) <= 1e-3);
        CHECK(rel_err(geo.alpha, exp.alpha) <= 1e-3);
    }
}

TEST_CASE("boundary validation names the violated invariant") {
    auto validate = [](double a0, double s0, double a1, double s1) {
        BoundaryConditions{a0, s0, a1, s1}.validate();
    };
    CHECK_THROWS_AS(validate(1.0, 0.0, 1.0, 80.0), InvalidBoundary);
    CHECK_THROWS_AS(validate(1.0, 2.0, 1.0, 1.0), InvalidBoundary);
    CHECK_THROWS_AS(validate(1.0, 0.002, 1.2, 80.0), InvalidBoundary);
    CHECK_THROWS_AS(validate(1.0, 0.002, -0.5, 80.0), InvalidBoundary);
}
