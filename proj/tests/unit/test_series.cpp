#include <doctest.h>

#include <cmath>

#include "rdslin/conjugacy.hpp"
#include "rdslin/errors.hpp"
#include "rdslin/trajectory.hpp"
#include "support.hpp"

using namespace rdslin;

namespace {

Vec vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

/// Scalar Newton for a e^{s} t + amp tanh(t) = y.
double solve_scalar(double slope, double amp, double y) {
    double t = y / slope;
    for (int i = 0; i < 60; ++i) {
        const double th = std::tanh(t);
        const double r = slope * t + amp * th - y;
        t -= r / (slope + amp * (1.0 - th * th));
    }
    return t;
}

/// Smooth bounded field with values of size `amp`.
FieldFn wave(double amp, double phase) {
    return [amp, phase](int fiber, const Vec& x) {
        Vec out(x.size());
        for (int i = 0; i < x.size(); ++i) {
            out(i) = amp * std::sin(1.3 * x(i) + 0.7 * fiber + phase + i);
        }
        return out;
    };
}

}  // namespace

TEST_SUITE("series") {
    TEST_CASE("closed-form constants") {
        CHECK(majorant_factor(1.0) == doctest::Approx(6.7317094357737).epsilon(1e-12));
        CHECK(contraction_factor(0.05, 1.0) == doctest::Approx(0.337).epsilon(2e-3));
        CHECK(contraction_factor(max_admissible_c(1.0), 1.0) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(series_tail(1.0, 10) < series_tail(1.0, 9));
    }

    TEST_CASE("q and the Picard bound on the autonomous problem") {
        test::AutonomousProblem ap(Family::tanh, 0.05, Family::zero, 0.0);
        CHECK(ap.problem.C.max() == doctest::Approx(0.05 * std::sqrt(2.0)).epsilon(1e-14));
        const SeriesParams s = choose_series_params(ap.problem, Direction::backward, 1e-6);
        CHECK(s.contraction_q == doctest::Approx(0.05 * majorant_factor(1.0)).epsilon(1e-14));
        CHECK(s.effective_q == s.contraction_q);
        CHECK(s.tail_bound <= 0.5e-6);
        CHECK(s.C_max * s.picard_bound <= 0.5e-6);
        const double k20 = std::pow(s.contraction_q, 20) / (1.0 - s.contraction_q) * s.majorant;
        CHECK(k20 < 1e-8);
        CHECK(s.certified_error <= 1e-6);

        // The forward operator does not depend on h when g = 0.
        const SeriesParams f = choose_series_params(ap.problem, Direction::forward, 1e-6);
        CHECK(f.effective_q == 0.0);
        CHECK(f.picard_k == 1);
    }

    TEST_CASE("smallness violation names the maximal admissible c") {
        test::AutonomousProblem ap(Family::tanh, 0.05, Family::zero, 0.0, 0.2, 64);
        try {
            (void)choose_series_params(ap.problem, Direction::forward, 1e-6);
            FAIL("expected a smallness violation");
        } catch (const HypothesisViolation& ex) {
            CHECK(ex.hypothesis() == hyp::smallness);
            CHECK(std::string(ex.what()).find("maximal admissible c = 0.148551") != std::string::npos);
        }
    }

    TEST_CASE("p vanishes when f = g and h = 0") {
        test::AutonomousProblem ap(Family::tanh, 0.05, Family::zero, 0.0, 0.05, 64);
        ConjugacyProblem same = ap.problem;
        same.g = same.f;
        for (const Vec& x : sample_box(2, 0, 20, 2.0, 3)) {
            for (int n = -3; n <= 3; ++n) {
                CHECK(p_term(same, Direction::forward, n, 0, x).norm() == 0.0);
            }
        }
    }

    TEST_CASE("p with g = 0 is minus f along the backward orbit") {
        test::AutonomousProblem ap(Family::tanh, 0.05, Family::zero, 0.0, 0.05, 64);
        const Cocycle& c = ap.cocycle;
        for (const Vec& x : sample_box(2, 0, 10, 2.0, 9)) {
            for (int n = 0; n <= 4; ++n) {
                const SplitPoint back = evolve_coupled(c, ap.f, split(c, x, 0), -(n + 1));
                const Vec expected = -ap.f(back.fiber, back.point());
                CHECK((p_term(ap.problem, Direction::forward, n, 0, x) - expected).norm() < 1e-15);
            }
        }
    }

    TEST_CASE("p at n = 0 against a one-step oracle") {
        test::AutonomousProblem ap(Family::tanh, 0.05, Family::sine, 0.04, 0.05, 64);
        const double e = std::exp(1.0);
        for (const Vec& x : sample_box(2, 0, 25, 2.0, 21)) {
            // Preimage under x -> A x + 0.05 tanh(x), coordinatewise.
            const Vec pre = vec2(solve_scalar(1.0 / e, 0.05, x(0)), solve_scalar(e, 0.05, x(1)));
            Vec expected(2);
            for (int i = 0; i < 2; ++i) {
                expected(i) = 0.04 * std::sin(pre(i)) - 0.05 * std::tanh(pre(i));
            }
            CHECK((p_term(ap.problem, Direction::forward, 0, 0, x) - expected).norm() < 1e-13);
        }
    }

    TEST_CASE("apply_T obeys the majorant for admissible fields") {
        test::AutonomousProblem ap(Family::tanh, 0.05, Family::sine, 0.04, 0.05, 96);
        const double mt = 2.0 * majorant_factor(1.0);
        for (int trial = 0; trial < 3; ++trial) {
            const FieldFn h = wave(0.3, trial);
            for (const Vec& x : sample_box(2, 0, 15, 2.0, 40 + trial)) {
                const SeriesValue v = apply_T(ap.problem, Direction::forward, h, 0, x, 20);
                CHECK(v.majorant_bound == doctest::Approx(mt * ap.problem.C[0]).epsilon(1e-14));
                CHECK(v.value.norm() <= v.majorant_bound);
            }
        }
        ConjugacyProblem same = ap.problem;
        same.g = same.f;
        CHECK(apply_T(same, Direction::forward, {}, 0, vec2(0.5, 0.5), 20).value.norm() == 0.0);
    }

    TEST_CASE("kernel table matches green") {
        const Cocycle c = test::scenario_cocycle("bernoulli", 30);
        const int N = 6;
        const KernelTable t(c, -10, 10, N);
        for (int j = -10; j <= 10; j += 5) {
            for (int n = -N; n <= N; ++n) {
                const Mat G = c.green(j - n, n);
                const double* g = t.at(j, n);
                for (int r = 0; r < 2; ++r) {
                    for (int s = 0; s < 2; ++s) {
                        CHECK(g[r * 2 + s] == doctest::Approx(G(r, s)).epsilon(1e-13).scale(1.0));
                    }
                }
            }
        }
    }
}

TEST_SUITE("conjugacy") {
    TEST_CASE("f = g gives h identically zero and an exact conjugacy") {
        test::AutonomousProblem ap(Family::tanh, 0.05, Family::zero, 0.0);
        ConjugacyProblem same = ap.problem;
        same.g = same.f;
        for (Direction d : {Direction::forward, Direction::backward}) {
            const ConjugacyField h = solve_h(same, d, 1e-6);
            for (const Vec& x : sample_box(2, 0, 30, 2.0, 5)) {
                CHECK(h(0, x).norm() == 0.0);
                CHECK((build_H(h)(0, x) - x).norm() == 0.0);
            }
            SampleSpec spec;
            spec.fibers = {0, 1};
            spec.per_fiber = 20;
            const ResidualReport r = conjugacy_residual(h, spec);
            CHECK(r.pass);
            CHECK(r.max_residual <= 1e-12);
        }
    }

    TEST_CASE("sliding and term-by-term sums agree") {
        test::AutonomousProblem ap(Family::tanh, 0.05, Family::sine, 0.04);
        for (Direction d : {Direction::forward, Direction::backward}) {
            SolveOptions slow;
            slow.recursive_sums = true;
            const ConjugacyField fast = solve_h(ap.problem, d, 1e-6);
            const ConjugacyField ref = solve_h(ap.problem, d, 1e-6, slow);
            for (const Vec& x : sample_box(2, 0, 6, 2.0, 8)) {
                CHECK((fast(0, x) - ref(0, x)).norm() < 1e-14);
            }
        }
    }

    TEST_CASE("solved field on the autonomous problem") {
        test::AutonomousProblem ap(Family::tanh, 0.05, Family::zero, 0.0);
        const ConjugacyField h = solve_h(ap.problem, Direction::forward, 1e-6);
        const ConjugacyField hb = solve_h(ap.problem, Direction::backward, 1e-6);
        SampleSpec spec;
        spec.fibers = {0};
        spec.per_fiber = 60;
        const ResidualReport r = conjugacy_residual(h, spec);
        CHECK(r.pass);
        CHECK(r.max_residual <= 1e-5);
        CHECK(r.amplification <= std::exp(1.0) + 0.05 + 1e-12);
        CHECK(r.max_bound_T_ratio <= 1.0);
        const FiberScalar T = h.bound_T();
        for (const Vec& x : sample_box(2, 0, 30, 3.0, 6)) {
            CHECK((build_H(h)(0, x) - x).norm() <= T[0]);
        }
        spec.per_fiber = 20;
        const RoundtripReport rt = homeomorphism_check(h, hb, spec);
        CHECK(rt.pass);
        CHECK(rt.max_backward_after_forward <= rt.bound_backward_after_forward);
        CHECK(rt.max_forward_after_backward <= rt.bound_forward_after_backward);
    }

    TEST_CASE("deeper Picard iterates reduce the residual") {
        test::AutonomousProblem ap(Family::tanh, 0.05, Family::sine, 0.04);
        SampleSpec spec;
        spec.fibers = {0};
        spec.per_fiber = 20;
        SolveOptions shallow;
        shallow.picard_k_override = 2;
        SolveOptions deep;
        deep.picard_k_override = 7;
        const ResidualReport a = conjugacy_residual(solve_h(ap.problem, Direction::forward, 1e-6, shallow), spec);
        const ResidualReport b = conjugacy_residual(solve_h(ap.problem, Direction::forward, 1e-6, deep), spec);
        CHECK(b.max_residual < a.max_residual);
    }

    TEST_CASE("a different initial iterate converges to the same field") {
        test::AutonomousProblem ap(Family::tanh, 0.05, Family::sine, 0.04);
        const double amp = 0.05;
        SolveOptions start;
        start.initial = wave(amp, 0.4);
        start.initial_norm = amp * std::sqrt(2.0) / ap.problem.C.min();
        const double tol = 1e-6;
        const ConjugacyField h0 = solve_h(ap.problem, Direction::forward, tol);
        const ConjugacyField h1 = solve_h(ap.problem, Direction::forward, tol, start);
        CHECK(h1.params().picard_k >= h0.params().picard_k);
        for (const Vec& x : sample_box(2, 0, 10, 2.0, 12)) {
            CHECK((h0(0, x) - h1(0, x)).norm() <= 2.0 * tol);
        }
    }

    TEST_CASE("empirical contraction stays below q") {
        test::AutonomousProblem ap(Family::tanh, 0.05, Family::zero, 0.0);
        SampleSpec spec;
        spec.fibers = {0, 3};
        spec.per_fiber = 10;
        const ContractionReport r = measure_contraction(ap.problem, Direction::backward, 20, spec, 12);
        CHECK(r.pass);
        CHECK(r.max_ratio > 0.0);
        CHECK(r.max_ratio <= r.q);
    }

    TEST_CASE("center component of h vanishes on center3d") {
        const Cocycle c = test::scenario_cocycle("center3d", 40);
        const FiberScalar budget = FiberScalar::constant("b", c.first(), c.last() - 1, 0.02);
        const Perturbation f = make_standard(Family::sine, amplitude_for_budget(Family::sine, budget, c), c, budget);
        const Perturbation g = make_zero(c);
        ConjugacyProblem p;
        p.cocycle = &c;
        p.f = &f;
        p.g = &g;
        const DichotomyConstants k = estimate_constants(c);
        p.lambda = k.lambda;
        p.c = 0.02;
        p.C = envelope_C(k.K, f.bound_D(), k.lambda).value;
        const ConjugacyField h = solve_h(p, Direction::forward, 1e-6);
        for (int w = -2; w <= 2; ++w) {
            for (const Vec& x : sample_box(3, w, 10, 2.0, 2)) {
                CHECK((c.projection(w, 2) * h(w, x)).norm() <= 1e-11);
            }
        }
    }
}
