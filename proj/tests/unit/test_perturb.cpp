#include <doctest.h>

#include <cmath>

#include "rdslin/errors.hpp"
#include "rdslin/perturb.hpp"
#include "rdslin/trajectory.hpp"
#include "support.hpp"

using namespace rdslin;

namespace {

Vec vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

}  // namespace

TEST_SUITE("perturb") {
    TEST_CASE("zero amplitude gives the zero map") {
        const Cocycle c = test::autonomous_cocycle(8);
        const Perturbation f = test::constant_family(Family::tanh, 0.0, c, 0.05);
        CHECK(f((0), vec2(1.5, -0.3)).norm() == 0.0);
        const PerturbationReport r = validate(make_zero(c), c, 100, 3);
        CHECK(r.pass);
        CHECK(r.max_quotient == 0.0);
        CHECK(r.max_center_leak == 0.0);
    }

    TEST_CASE("tanh at amplitude 0.05 has Lipschitz constant 0.05") {
        const Cocycle c = test::autonomous_cocycle(8);
        const Perturbation f = test::constant_family(Family::tanh, 0.05, c, 0.05);
        CHECK(f.lipschitz(0) == doctest::Approx(0.05).epsilon(1e-15));
        // Euclidean sup of componentwise tanh on R^2 is sqrt(2).
        CHECK(f.bound(0) == doctest::Approx(0.05 * std::sqrt(2.0)).epsilon(1e-15));
        const Vec x = vec2(0.3, -2.0);
        CHECK((f(0, x) - 0.05 * vec2(std::tanh(0.3), std::tanh(-2.0))).norm() < 1e-16);
    }

    TEST_CASE("sampled quotients stay within the budget") {
        const Cocycle c = test::scenario_cocycle("center3d", 16);
        const FiberScalar budget = FiberScalar::constant("b", c.first(), c.last() - 1, 0.04);
        const FiberScalar amp = amplitude_for_budget(Family::sine, budget, c);
        const Perturbation f = make_standard(Family::sine, amp, c, budget);
        const PerturbationReport r = validate(f, c, 100, 11);
        CHECK(r.pass);
        CHECK(r.max_quotient_ratio <= 1.0 + 1e-12);
        CHECK(r.max_center_leak <= 1e-12);
    }

    TEST_CASE("twice the budget is rejected at construction and flagged by validation") {
        const Cocycle c = test::autonomous_cocycle(8);
        CHECK_THROWS_AS((void)test::constant_family(Family::tanh, 0.1, c, 0.05), HypothesisViolation);

        const FiberScalar lip = FiberScalar::constant("lip", c.first(), c.last() - 1, 0.05);
        const FiberScalar bound = FiberScalar::constant("bound", c.first(), c.last() - 1, 0.2);
        const Perturbation bad = make_custom(
            [](int, const Vec& x) {
                Vec out = x;
                for (int i = 0; i < x.size(); ++i) out(i) = 0.1 * std::tanh(x(i));
                return out;
            },
            c, lip, bound, lip);
        const PerturbationReport r = validate(bad, c, 100, 5);
        CHECK_FALSE(r.pass);
        CHECK(r.max_quotient_ratio > 1.5);
    }

    TEST_CASE("family names round trip") {
        for (Family f : {Family::zero, Family::tanh, Family::sine, Family::bump}) {
            CHECK(parse_family(to_string(f)) == f);
        }
        CHECK_THROWS_AS((void)parse_family("cubic"), ConfigError);
    }

    TEST_CASE("tower with a constant regular bound puts every fiber at level zero") {
        const Cocycle c = test::autonomous_cocycle(16);
        const FiberScalar Dp = FiberScalar::constant("D'", c.first(), c.last(), 0.5);
        const FiberScalar K = FiberScalar::constant("K", c.first(), c.last(), 1.0);
        const Tower t = make_tower(Dp, K, 0.05, 1.0, Family::tanh, c, 0.5);
        CHECK(t.unresolved == 0);
        for (int lvl : t.level) CHECK(lvl == 0);
        const double s0 = t.scale.values.front();
        for (double s : t.scale.values) CHECK(s == doctest::Approx(s0));
        CHECK(t.max_budget_ratio <= 1.0 + 1e-12);
    }

    TEST_CASE("tower levels follow first entry times") {
        const Cocycle c = test::autonomous_cocycle(8);
        // A = {0, 3}: fibers 1..3 enter at 3 - k, fiber 0 and 3 are in A.
        const FiberScalar Dp = FiberScalar::generate("D'", c.first(), c.last(),
                                                     [](int k) { return (k == 0 || k == 3) ? 1.0 : 5.0; });
        const FiberScalar K = FiberScalar::constant("K", c.first(), c.last(), 1.0);
        const Tower t = make_tower(Dp, K, 0.05, 1.0, Family::tanh, c, 1.0);
        auto level = [&](int k) { return t.level[static_cast<std::size_t>(k - c.first())]; };
        CHECK(level(0) == 0);
        CHECK(level(3) == 0);
        CHECK(level(2) == 1);
        CHECK(level(1) == 2);
        CHECK(level(-1) == 1);
        CHECK(level(-2) == 2);
        // Scales (c/T) e^{-rho |n - 1|} decay in the level from level one on.
        CHECK(t.scale[-2] < t.scale[-1]);
        CHECK(t.scale[-1] == doctest::Approx(0.05));
        CHECK(t.scale[0] == doctest::Approx(0.05 * std::exp(-1.0)));
        CHECK(validate(t.f, c, 100, 2).pass);
        CHECK_THROWS_AS((void)make_tower(Dp, K, 0.05, 1.0, Family::tanh, c, 0.5), ConfigError);
    }

    TEST_CASE("fiber map inversion") {
        const Cocycle c = test::autonomous_cocycle(8);
        const Perturbation zero = make_zero(c);
        const Vec eta = Vec::Zero(2);
        const PerturbedMap L{c, zero, 0, eta};
        const Inversion lin = invert_fiber_map(L, vec2(1.0, 2.0));
        CHECK((lin.xi - vec2(std::exp(1.0), 2.0 / std::exp(1.0))).norm() < 1e-14);

        const Perturbation f = test::constant_family(Family::tanh, 0.05, c, 0.05);
        const PerturbedMap F{c, f, 0, eta};
        const auto xs = sample_box(2, 0, 100, 3.0, 17);
        for (const Vec& target : xs) {
            const Inversion inv = invert_fiber_map(F, target);
            CHECK((F(inv.xi) - target).norm() <= 1e-12);
        }
        // Lipschitz constant of the inverse is at most e^rho / (1 - c e^rho) = e / (1 - 0.05 e).
        const double bound = std::exp(1.0) / (1.0 - 0.05 * std::exp(1.0));
        for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
            const Vec a = invert_fiber_map(F, xs[i]).xi;
            const Vec b = invert_fiber_map(F, xs[i + 1]).xi;
            CHECK((a - b).norm() <= bound * (xs[i] - xs[i + 1]).norm() * (1.0 + 1e-12));
        }
    }
}

TEST_SUITE("trajectory") {
    TEST_CASE("splitting a point") {
        const Cocycle c2 = test::autonomous_cocycle(8);
        const SplitPoint p2 = split(c2, vec2(0.7, -1.1), 0);
        CHECK((p2.xi - vec2(0.7, -1.1)).norm() == 0.0);
        CHECK(p2.eta.norm() == 0.0);

        const nlohmann::json doc = {
            {"scenario", "custom"},
            {"dimension", 3},
            {"base", {{"kind", "point"}}},
            {"blocks", {{"layout", {1, 1, 1}}, {"stable", {0.5}}, {"center", {1.0}}, {"unstable", {2.0}}}}};
        const Cocycle c3 = build_cocycle(parse_config(doc), 8);
        Vec x(3);
        x << 1.0, 2.0, 3.0;
        const SplitPoint p = split(c3, x, 0);
        Vec xi(3), eta(3);
        xi << 1.0, 0.0, 3.0;
        eta << 0.0, 2.0, 0.0;
        CHECK((p.xi - xi).norm() == 0.0);
        CHECK((p.eta - eta).norm() == 0.0);
        CHECK((p.point() - x).norm() <= 1e-15);
        for (int n = -5; n <= 5; ++n) {
            CHECK((evolve_center(c3, p.eta, 0, n) - eta).norm() < 1e-14);
        }
    }

    TEST_CASE("center evolution with a modulated center block") {
        const Cocycle c = test::scenario_cocycle("center3d", 24);
        const Vec x = sample_box(3, 0, 1, 1.0, 4).front();
        const SplitPoint p = split(c, x, 0);
        CHECK((evolve_center(c, p.eta, 0, 0) - p.eta).norm() == 0.0);
        for (int n = 1; n <= 6; ++n) {
            const Vec fwd = evolve_center(c, p.eta, 0, n);
            CHECK((evolve_center(c, fwd, n, -n) - p.eta).norm() < 1e-12);
        }
    }

    TEST_CASE("coupled evolution") {
        const Cocycle c = test::autonomous_cocycle(16);
        const Perturbation zero = make_zero(c);
        const SplitPoint start = split(c, vec2(0.4, -0.2), 0);
        CHECK((evolve_coupled(c, zero, start, 0).point() - start.point()).norm() == 0.0);
        const SplitPoint lin = evolve_coupled(c, zero, start, 4);
        CHECK((lin.point() - c.compose(0, 4) * start.point()).norm() < 1e-12);
        CHECK(lin.fiber == 4);

        const Perturbation f = test::constant_family(Family::tanh, 0.05, c, 0.05);
        const SplitPoint fwd = evolve_coupled(c, f, start, 5);
        const SplitPoint back = evolve_coupled(c, f, fwd, -5);
        CHECK(back.fiber == 0);
        CHECK((back.point() - start.point()).norm() < 1e-10);

        // Semigroup property.
        const SplitPoint two = evolve_coupled(c, f, evolve_coupled(c, f, start, 2), 3);
        CHECK((two.point() - fwd.point()).norm() <= 1e-9 * (1.0 + fwd.point().norm()));
    }

    TEST_CASE("orbit graph links are consistent") {
        const Cocycle c = test::autonomous_cocycle(16);
        const Perturbation f = test::constant_family(Family::tanh, 0.05, c, 0.05);
        OrbitGraph graph(c, f);
        const auto id = graph.intern(0, vec2(0.25, 0.5));
        const auto fwd = graph.walk(id, 3);
        CHECK(graph.fiber(fwd) == 3);
        CHECK(graph.walk(fwd, -3) == id);
        const auto bwd = graph.walk(id, -4);
        CHECK(graph.walk(bwd, 4) == id);
        const SplitPoint direct = evolve_coupled(c, f, split(c, vec2(0.25, 0.5), 0), -4);
        CHECK((graph.point(bwd) - direct.point()).norm() < 1e-12);
    }
}
