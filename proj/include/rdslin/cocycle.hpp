#pragma once

#include <array>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "rdslin/driving.hpp"
#include "rdslin/linalg.hpp"
#include "rdslin/memo.hpp"
#include "rdslin/tempering.hpp"

namespace rdslin {

/// Projections (Pi^1, Pi^2, Pi^3) onto stable, center and unstable directions.
using ProjectionTriple = std::array<Mat, 3>;

struct PairHash {
    std::size_t operator()(const std::pair<int, int>& p) const noexcept {
        return std::hash<long long>{}((static_cast<long long>(p.first) << 32) ^ static_cast<unsigned>(p.second));
    }
};

/// Linear cocycle A(omega) with an invariant three-way splitting on one orbit window.
class Cocycle {
public:
    using MatrixFn = std::function<Mat(int offset, const FiberData&)>;
    using SplittingFn = std::function<ProjectionTriple(int offset, const FiberData&)>;

    /// Restricted blocks with condition number above this count as singular.
    static constexpr double kConditionCap = 1e8;

    Cocycle(OrbitWindow window, int dim, const MatrixFn& matrix, const SplittingFn& splitting);

    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] const OrbitWindow& window() const noexcept { return window_; }
    [[nodiscard]] int first() const noexcept { return window_.first(); }
    [[nodiscard]] int last() const noexcept { return window_.last(); }

    [[nodiscard]] const Mat& A(int k) const;
    /// block in {1, 2, 3}
    [[nodiscard]] const Mat& projection(int k, int block) const;
    [[nodiscard]] const Mat& su_projection(int k) const;  ///< Id - Pi^2(k)
    [[nodiscard]] int block_rank(int k, int block) const;

    /// A(k+n-1) ... A(k); identity for n = 0. Memoized.
    [[nodiscard]] Mat compose(int k, int n) const;

    /// One backward step on a block: maps Im Pi^b(k+1) to Im Pi^b(k) and
    /// annihilates the complementary blocks at k+1. Throws HypothesisViolation
    /// when the block is singular.
    [[nodiscard]] const Mat& step_inverse(int k, int block) const;
    [[nodiscard]] double block_condition(int k, int block) const;

    /// Inverse of A(k) restricted to E^{s,u}: step_inverse(k,1) + step_inverse(k,3).
    [[nodiscard]] const Mat& su_inverse(int k) const;

    /// Inverse of A(k+n-1)...A(k-n) restricted to block b: Im Pi^b(k) -> Im Pi^b(k-n), n >= 1.
    [[nodiscard]] Mat restricted_inverse(int k, int n, int block) const;

    /// Green-type kernel: A(k,n) Pi^1(k) for n >= 0, -A(k,n) Pi^3(k) for n < 0.
    [[nodiscard]] Mat green(int k, int n) const;

    /// Full inverse of A(k); throws when A(k) is singular.
    [[nodiscard]] const Mat& inverse(int k) const;
    [[nodiscard]] bool fully_invertible() const noexcept { return fully_invertible_; }

    /// A(k, n) for any sign of n, using full inverses for n < 0.
    [[nodiscard]] Mat evolve_full(int k, int n) const;

    /// Replaces the splitting at one fiber by R Pi R^T (fault injection for tests and demos).
    void rotate_splitting_at(int k, double angle);

private:
    [[nodiscard]] std::size_t index(int k) const;
    void compute_inverses();

    OrbitWindow window_;
    int dim_;
    std::vector<Mat> a_;
    std::vector<ProjectionTriple> proj_;
    std::vector<Mat> su_proj_;
    std::vector<std::array<int, 3>> rank_;
    std::vector<std::array<Mat, 3>> step_inv_;
    std::vector<std::array<double, 3>> cond_;
    std::vector<Mat> su_inv_;
    std::vector<Mat> full_inv_;
    bool fully_invertible_ = true;
    ConcurrentMemo<std::pair<int, int>, Mat, PairHash> compose_cache_{1u << 16};
};

struct HypothesisCheck {
    std::string name;
    std::string hypothesis;
    double max_violation = 0.0;
    double tolerance = 0.0;
    int worst_fiber = 0;
    bool pass = true;
};

struct HypothesisReport {
    std::vector<HypothesisCheck> checks;
    [[nodiscard]] bool pass() const;
    [[nodiscard]] const HypothesisCheck* first_failure() const;
};

/// Splitting identities, invariance and block invertibility on every fiber.
[[nodiscard]] HypothesisReport validate_hypotheses(const Cocycle& cocycle);

struct DichotomyConstants {
    double lambda = 0.0;
    double rho = 0.0;
    bool has_growth = false;  ///< rho and Z need a fully invertible cocycle
    FiberScalar K, Z, M;
    TemperedDiagnostic K_diagnostic, Z_diagnostic;
    int grid_points = 0;

    [[nodiscard]] double alpha0() const { return has_growth ? lambda / rho : 0.0; }
};

struct EstimateOptions {
    int grid_points = 64;
    double temper_threshold = 0.01;
    double rate_floor = 1e-3;
    int bisection_steps = 60;
};

/// Fits lambda, K (and rho, Z when the cocycle is invertible) on the window.
/// Throws HypothesisViolation when no positive rate certifies decay.
[[nodiscard]] DichotomyConstants estimate_constants(const Cocycle& cocycle, const EstimateOptions& options = {});

/// Block-diagonal change-of-basis scenario: A = V diag(m) V^{-1} and
/// Pi^i = V E_i V^{-1}, blocks ordered stable, center, unstable.
struct BlockLayout {
    int stable = 1;
    int center = 0;
    int unstable = 1;
    [[nodiscard]] int dim() const { return stable + center + unstable; }
};

[[nodiscard]] ProjectionTriple coordinate_projections(const BlockLayout& layout, const Mat& basis);

}  // namespace rdslin
