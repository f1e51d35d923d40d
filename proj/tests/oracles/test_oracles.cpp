#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "grid_oracle.hpp"
#include "rdslin/conjugacy.hpp"
#include "rdslin/holder.hpp"
#include "support.hpp"

using namespace rdslin;

// Reference values below were computed once with mpmath at 30 significant digits
// and are frozen here; the library computes them independently.
namespace frozen {
constexpr double q_lambda1_c005 = 0.336585471788686;
constexpr double c_cap_lambda1 = 0.148550677883657;
constexpr double c_cap_lambda_half = 0.0968462151569989;
constexpr double c_cap_lambda_log_sqrt6 = 0.140758280860825;
constexpr double majorant_MT_lambda1 = 13.4634188715474;
constexpr double holder_epsilon = 0.025;
constexpr double holder_R = 3.20371134511124;
constexpr double holder_B = 134.000930435858;
constexpr double envelope_N = 6.14142135623731;
constexpr double budget_d = 1.80197399626956e-14;
constexpr double holder_c_max = 0.182442348582584;
constexpr double log_sqrt6 = 0.895879734614028;
constexpr double sqrt6_half = 1.22474487139159;
}  // namespace frozen

namespace {

/// Forward h for the autonomous problem with g = 0, summed term by term along
/// scalar orbits (the two coordinates decouple).
std::array<double, 2> naive_series(double x1, double x2, int N, double amp = 0.05) {
    const double a = std::exp(-1.0), b = std::exp(1.0);
    auto inverse = [&](double y) {
        double t = y / (a + amp);
        for (int i = 0; i < 100; ++i) {
            const double th = std::tanh(t);
            const double dt = (a * t + amp * th - y) / (a + amp * (1.0 - th * th));
            t -= dt;
            if (std::abs(dt) <= 1e-17 * (1.0 + std::abs(t))) break;
        }
        return t;
    };
    double hs = 0.0;
    double t = x1;
    for (int n = 0; n <= N; ++n) {
        t = inverse(t);
        hs -= std::exp(-static_cast<double>(n)) * amp * std::tanh(t);
    }
    double hu = 0.0;
    t = x2;
    for (int m = 1; m <= N; ++m) {
        hu += std::exp(-static_cast<double>(m)) * amp * std::tanh(t);
        t = b * t + amp * std::tanh(t);
    }
    return {hs, hu};
}

}  // namespace

TEST_SUITE("oracles") {
    TEST_CASE("contraction factor and caps") {
        CHECK(contraction_factor(0.05, 1.0) == doctest::Approx(frozen::q_lambda1_c005).epsilon(1e-13));
        CHECK(max_admissible_c(1.0) == doctest::Approx(frozen::c_cap_lambda1).epsilon(1e-12));
        CHECK(max_admissible_c(0.5) == doctest::Approx(frozen::c_cap_lambda_half).epsilon(1e-12));
        CHECK(max_admissible_c(frozen::log_sqrt6) == doctest::Approx(frozen::c_cap_lambda_log_sqrt6).epsilon(1e-12));
        CHECK(2.0 * majorant_factor(1.0) == doctest::Approx(frozen::majorant_MT_lambda1).epsilon(1e-13));
    }

    TEST_CASE("periodic fit reproduces the averaged rate") {
        const DichotomyConstants k = estimate_constants(test::scenario_cocycle("periodic", 64));
        CHECK(k.lambda == doctest::Approx(frozen::log_sqrt6).epsilon(1e-8));
        CHECK(k.rho == doctest::Approx(frozen::log_sqrt6).epsilon(1e-8));
        CHECK(k.K[0] == doctest::Approx(frozen::sqrt6_half).epsilon(1e-8));
        CHECK(k.K[1] == doctest::Approx(1.0).epsilon(1e-8));
    }

    TEST_CASE("Hoelder budget on the autonomous cocycle") {
        const Cocycle c = test::autonomous_cocycle(64);
        const DichotomyConstants k = estimate_constants(c);
        const FiberScalar D = family_bound(Family::tanh, growth_budget(k, 0.05), c);
        const HolderBudget b = compute_budget(k, D, 0.5, 0.05);
        CHECK(b.epsilon == doctest::Approx(frozen::holder_epsilon).epsilon(1e-9));
        CHECK(b.R == doctest::Approx(frozen::holder_R).epsilon(1e-9));
        CHECK(b.B.value == doctest::Approx(frozen::holder_B).epsilon(1e-8));
        CHECK(b.N.value[0] == doctest::Approx(frozen::envelope_N).epsilon(1e-9));
        CHECK(b.d[0] == doctest::Approx(frozen::budget_d).epsilon(1e-7));
        CHECK(b.c_max == doctest::Approx(frozen::holder_c_max).epsilon(1e-9));
    }

    TEST_CASE("apply_T matches a naive summation on the autonomous problem") {
        test::AutonomousProblem ap(Family::tanh, 0.05, Family::zero, 0.0, 0.05, 96);
        for (const int N : {5, 20, 40}) {
            for (const Vec& x : sample_box(2, 0, 40, 2.0, 77)) {
                const SeriesValue v = apply_T(ap.problem, Direction::forward, {}, 0, x, N);
                const auto ref = naive_series(x(0), x(1), N);
                CHECK(std::abs(v.value(0) - ref[0]) <= 1e-12);
                CHECK(std::abs(v.value(1) - ref[1]) <= 1e-12);
            }
        }
    }

    TEST_CASE("grid oracle agrees with the exact series within its interpolation bound") {
        const oracle::GridOracle grid;
        CHECK(grid.step() == 1.0 / 64.0);
        CHECK(grid.iterations() < 60);
        double worst = 0.0;
        for (const Vec& x : sample_box(2, 0, 300, 2.0, 99)) {
            const auto g = grid({x(0), x(1)});
            const auto ref = naive_series(x(0), x(1), 80);
            worst = std::max({worst, std::abs(g[0] - ref[0]), std::abs(g[1] - ref[1])});
        }
        MESSAGE("grid oracle max error " << worst << " against bound " << grid.interpolation_bound());
        CHECK(worst <= grid.interpolation_bound());
    }
}
