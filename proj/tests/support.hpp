#pragma once

#include <cmath>

#include <json.hpp>

#include "rdslin/cocycle.hpp"
#include "rdslin/conjugacy.hpp"
#include "rdslin/perturb.hpp"
#include "rdslin/scenario.hpp"
#include "rdslin/tempering.hpp"

namespace rdslin::test {

/// Point base, A = diag(e^-1, e), coordinate splitting.
inline Cocycle autonomous_cocycle(int half_width = 64) {
    return build_cocycle(parse_config(nlohmann::json{{"scenario", "autonomous"}}), half_width);
}

inline Cocycle scenario_cocycle(const std::string& name, int half_width = 64) {
    return build_cocycle(parse_config(nlohmann::json{{"scenario", name}}), half_width);
}

/// Perturbation of a family with constant amplitude, budget c/K(sigma w).
inline Perturbation constant_family(Family family, double amplitude, const Cocycle& c, double budget) {
    const FiberScalar amp = FiberScalar::constant("eps", c.first(), c.last() - 1, amplitude);
    const FiberScalar lip = FiberScalar::constant("budget", c.first(), c.last() - 1, budget);
    return make_standard(family, amp, c, lip);
}

/// Owns the pieces of a hand-built conjugacy problem on the autonomous cocycle.
struct AutonomousProblem {
    Cocycle cocycle;
    Perturbation f, g;
    ConjugacyProblem problem;

    AutonomousProblem(Family ff, double fa, Family gf, double ga, double c = 0.05, int half_width = 480)
        : cocycle(autonomous_cocycle(half_width)),
          f(ff == Family::zero ? make_zero(cocycle) : constant_family(ff, fa, cocycle, c)),
          g(gf == Family::zero ? make_zero(cocycle) : constant_family(gf, ga, cocycle, c)) {
        problem.cocycle = &cocycle;
        problem.f = &f;
        problem.g = &g;
        problem.lambda = 1.0;
        problem.c = c;
        FiberScalar D = f.bound_D();
        const FiberScalar Dg = g.bound_D();
        for (std::size_t i = 0; i < D.values.size(); ++i) {
            D.values[i] = std::max(D.values[i], Dg.values[i]);
        }
        const FiberScalar K = FiberScalar::constant("K", cocycle.first(), cocycle.last(), 1.0);
        problem.C = envelope_C(K, D, 1.0).value;
    }
    AutonomousProblem(const AutonomousProblem&) = delete;
    AutonomousProblem& operator=(const AutonomousProblem&) = delete;
};

}  // namespace rdslin::test
