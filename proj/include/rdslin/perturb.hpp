#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rdslin/cocycle.hpp"
#include "rdslin/linalg.hpp"
#include "rdslin/tempering.hpp"

namespace rdslin {

/// Base nonlinearities with global Lipschitz constant 1 (zero has 0).
enum class Family { zero, tanh, sine, bump, custom };

[[nodiscard]] std::string to_string(Family f);
[[nodiscard]] Family parse_family(std::string_view name);
[[nodiscard]] double base_lipschitz(Family f);
/// Euclidean sup norm of the base map on R^d.
[[nodiscard]] double base_sup(Family f, int dim);

/// f_k(x) = (Id - Pi^2(k+1)) eps(k) base(x), defined for fibers k in [first, last].
/// The range projection is taken at the target fiber sigma(omega), the fiber the
/// value lives in when f is added to A(omega) x.
class Perturbation {
public:
    using CustomFn = std::function<Vec(int fiber, const Vec& x)>;

    Perturbation() = default;

    [[nodiscard]] Vec operator()(int fiber, const Vec& x) const;
    /// Allocation-free evaluation into out[0..dim).
    void eval(int fiber, const double* x, double* out) const;

    [[nodiscard]] Family family() const noexcept { return family_; }
    [[nodiscard]] bool is_zero() const noexcept { return family_ == Family::zero; }
    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] int first() const noexcept { return first_; }
    [[nodiscard]] int last() const noexcept { return first_ + static_cast<int>(amplitude_.size()) - 1; }
    [[nodiscard]] bool defined_at(int fiber) const noexcept { return fiber >= first() && fiber <= last(); }

    [[nodiscard]] double amplitude(int fiber) const;
    /// Declared Lipschitz constant of f_fiber.
    [[nodiscard]] double lipschitz(int fiber) const;
    /// Declared bound on sup |f_fiber|.
    [[nodiscard]] double bound(int fiber) const;
    /// Allowed Lipschitz constant (c/K(sigma omega) or d(omega)).
    [[nodiscard]] double budget(int fiber) const;

    [[nodiscard]] FiberScalar bound_D() const;
    [[nodiscard]] FiberScalar lipschitz_scalar() const;

    friend Perturbation make_standard(Family, const FiberScalar&, const Cocycle&, const FiberScalar&);
    friend Perturbation make_zero(const Cocycle&);
    friend Perturbation make_custom(CustomFn, const Cocycle&, const FiberScalar&, const FiberScalar&,
                                    const FiberScalar&);

private:
    [[nodiscard]] std::size_t index(int fiber) const;

    Family family_ = Family::zero;
    int dim_ = 0;
    int first_ = 0;
    std::vector<double> amplitude_;
    std::vector<double> lipschitz_;
    std::vector<double> bound_;
    std::vector<double> budget_;
    std::vector<Mat> range_projector_;
    CustomFn custom_;
};

/// Throws HypothesisViolation(lipschitz-budget) when eps(k) L ||Id - Pi^2(k+1)|| exceeds budget(k).
[[nodiscard]] Perturbation make_standard(Family family, const FiberScalar& amplitude, const Cocycle& cocycle,
                                         const FiberScalar& lip_budget);
[[nodiscard]] Perturbation make_zero(const Cocycle& cocycle);
/// Arbitrary evaluator with declared constants; no budget check (used to inject violations).
[[nodiscard]] Perturbation make_custom(Perturbation::CustomFn fn, const Cocycle& cocycle, const FiberScalar& lipschitz,
                                       const FiberScalar& bound, const FiberScalar& budget);

/// Amplitude schedule that puts the Lipschitz constant of family at budget(k).
[[nodiscard]] FiberScalar amplitude_for_budget(Family family, const FiberScalar& lip_budget, const Cocycle& cocycle);

struct Tower {
    Perturbation f;
    double threshold = 0.0;
    std::vector<int> level;       ///< first-entry time per fiber, -1 if no entry inside the window
    FiberScalar scale;            ///< Lipschitz scale per fiber
    int unresolved = 0;           ///< fibers without in-window entry (fallback scale c / D'(sigma omega))
    double max_budget_ratio = 0;  ///< max over fibers of scale / (c / K(sigma omega))
};

/// Tower construction over A = {D_regular <= T}; T defaults to the window median.
[[nodiscard]] Tower make_tower(const FiberScalar& d_regular, const FiberScalar& K, double c, double rho, Family family,
                               const Cocycle& cocycle, std::optional<double> threshold = std::nullopt);

struct PerturbationReport {
    int fibers = 0;
    int samples_per_fiber = 0;
    double max_quotient = 0.0;         ///< max sampled |f(x)-f(y)|/|x-y|
    double max_quotient_ratio = 0.0;   ///< ... divided by the budget
    double max_norm_ratio = 0.0;       ///< max |f(x)| / D(omega)
    double max_center_leak = 0.0;      ///< max |Pi^2(sigma omega) f(x)|
    bool pass = true;
};

[[nodiscard]] PerturbationReport validate(const Perturbation& f, const Cocycle& cocycle, int samples_per_fiber,
                                          std::uint64_t seed, double radius = 4.0);

/// F(xi) = A(fiber) xi + f_fiber(xi + eta) on E^{s,u}(fiber).
struct PerturbedMap {
    const Cocycle& cocycle;
    const Perturbation& f;
    int fiber;
    Vec eta;

    [[nodiscard]] Vec operator()(const Vec& xi) const;
};

struct Inversion {
    Vec xi;
    int iterations = 0;
    double contraction = 0.0;      ///< ||A^{-1}|_{E^{s,u}}|| Lip(f)
    double a_posteriori = 0.0;     ///< kappa/(1-kappa) times the last step
};

/// Picard iteration xi <- A^{-1}(target - f(xi + eta)).
[[nodiscard]] Inversion invert_fiber_map(const PerturbedMap& F, const Vec& target, double tol = 1e-14,
                                         int max_iterations = 200);

}  // namespace rdslin
