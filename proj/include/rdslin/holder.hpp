#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rdslin/cocycle.hpp"
#include "rdslin/conjugacy.hpp"
#include "rdslin/linalg.hpp"
#include "rdslin/perturb.hpp"
#include "rdslin/tempering.hpp"

namespace rdslin {

/// |x|_w = max_{|n| <= trunc} |A(w, n) x| e^{-rho |n|}. Needs a fully invertible cocycle.
[[nodiscard]] double adapted_norm(const Cocycle& cocycle, const Vec& x, int fiber, int trunc, double rho);

/// (e^rho + c) / (1 - c e^rho); throws HypothesisViolation(smallness) when c e^rho >= 1.
[[nodiscard]] double holder_ratio(double rho, double c);

/// Largest c for which the series B converges: R(c)^alpha e^{5 eps - lambda} = 1.
[[nodiscard]] double holder_c_max(double lambda, double rho, double alpha, double epsilon);

struct SeriesB {
    double value = 0.0;  ///< partial sum plus the geometric tail bound
    double tail = 0.0;
    int terms = 0;       ///< largest |n| summed explicitly
    double ratio = 0.0;  ///< r = e^{-lambda + 5 eps} R^alpha
};

[[nodiscard]] SeriesB series_B(double lambda, double rho, double alpha, double epsilon, double c);

struct HolderBudget {
    double alpha = 0.0;
    double alpha0 = 0.0;
    double epsilon = 0.0;
    double c_base = 0.0;
    double R = 0.0;          ///< (e^rho + c)/(1 - c e^rho)
    double c_max = 0.0;      ///< divergence threshold of B
    SeriesB B;
    Envelope N;
    FiberScalar d;           ///< final smallness function, defined on [first, last - 1]
    FiberScalar d_formula;   ///< (c / (12 B N^3))^{1/alpha} before the two caps
    int capped_by_Z = 0;     ///< fibers where c/Z(sigma w) was the binding cap
    int capped_by_one = 0;
};

/// Builds the budget for 0 < alpha < alpha0. D_upper must dominate the sup bound of every
/// perturbation installed with the resulting budgets.
[[nodiscard]] HolderBudget compute_budget(const DichotomyConstants& constants, const FiberScalar& D_upper, double alpha,
                                          double c);

/// c / Z(sigma w) on [first, last - 1].
[[nodiscard]] FiberScalar growth_budget(const DichotomyConstants& constants, double c);

/// Sup bound of a family installed at the Lipschitz budget `budget`.
[[nodiscard]] FiberScalar family_bound(Family family, const FiberScalar& budget, const Cocycle& cocycle);

struct InequalityCheck {
    std::string name;
    int samples = 0;
    double max_ratio = 0.0;  ///< max left / right
    bool pass = true;
};

struct InequalityReport {
    std::vector<InequalityCheck> checks;
    [[nodiscard]] bool pass() const;
    [[nodiscard]] const InequalityCheck* find(const std::string& name) const;
};

struct SuiteOptions {
    std::vector<int> fibers{0};
    int samples = 1000;
    int max_n = 6;
    int trunc = 24;
    double radius = 2.0;
    std::uint64_t seed = 1;
};

/// Sampled checks of the adapted-norm sandwich, one-step growth, the center and
/// coupled-trajectory deviation bounds and the perturbed-map inverse bound.
/// f must satisfy Lip f_w <= c / Z(sigma w) and N must be built with its sup bound.
[[nodiscard]] InequalityReport verify_trajectory_estimates(const Cocycle& cocycle, const DichotomyConstants& constants,
                                                           const HolderBudget& budget, const Perturbation& f,
                                                           const SuiteOptions& options);

/// A bounded field with |h(w,x) - h(w,z)| <= |x - z|^alpha and values in E^{s,u}(w).
[[nodiscard]] FieldFn holder_test_field(const Cocycle& cocycle, double alpha, std::uint64_t seed);

/// Hoelder bounds for f and g, the composed trajectory bound and the term estimate for p,
/// with f and g installed at the budgets d. h must lie in Y^alpha.
[[nodiscard]] InequalityReport verify_term_estimates(const ConjugacyProblem& problem, const HolderBudget& budget,
                                                     const FieldFn& h, const SuiteOptions& options);

/// One application of the truncated series operator keeps |Th(x) - Th(z)| <= |x - z|^alpha.
[[nodiscard]] InequalityCheck holder_stability(const ConjugacyProblem& problem, const HolderBudget& budget,
                                               const FieldFn& h, int trunc_N, const SuiteOptions& options);

struct HolderPair {
    double distance = 0.0;
    double image_distance = 0.0;
};

struct HolderReport {
    double slope = 0.0;
    double intercept = 0.0;
    double T = 0.0;
    double alpha = 0.0;
    double max_bound_ratio = 0.0;  ///< max |H(x)-H(z)| / (T |x-z|^alpha)
    double min_distance = 0.0;
    double max_distance = 0.0;
    double dyadic_span = 0.0;      ///< log2(max/min distance)
    int fiber = 0;
    double radius = 0.0;
    std::vector<HolderPair> pairs;
    bool pass = false;
};

/// Constant of the Hoelder statement on the ball of radius r: one plus a diameter bound above 1.
[[nodiscard]] double holder_constant(double radius);

/// Fits the slope from explicit pairs; throws ConfigError on a degenerate set.
[[nodiscard]] HolderReport fit_holder(std::vector<HolderPair> pairs, double alpha, double radius);

using PointMap = std::function<Vec(const Vec&)>;

/// Samples pairs in the ball of radius `radius`, separations over 20 dyadic scales.
[[nodiscard]] HolderReport empirical_holder(const PointMap& H, int dim, double radius, int pairs, double alpha,
                                            std::uint64_t seed);

}  // namespace rdslin
