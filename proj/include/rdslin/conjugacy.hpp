#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rdslin/cocycle.hpp"
#include "rdslin/linalg.hpp"
#include "rdslin/perturb.hpp"
#include "rdslin/tempering.hpp"

namespace rdslin {

/// forward: h with H o (A+f) = (A+g) o H. backward: hbar with the roles of f and g swapped.
enum class Direction { forward, backward };

[[nodiscard]] std::string to_string(Direction d);

using FieldFn = std::function<Vec(int fiber, const Vec& x)>;

/// Everything the series operator needs. Non-owning.
struct ConjugacyProblem {
    const Cocycle* cocycle = nullptr;
    const Perturbation* f = nullptr;
    const Perturbation* g = nullptr;
    double lambda = 0.0;
    FiberScalar C;   ///< envelope with K(sigma w) D(w) <= C(w), C regular at rate lambda/2
    double c = 0.0;  ///< common Lipschitz scale: Lip f_w, Lip g_w <= c / K(sigma w)

    /// The perturbation generating the orbits along which the series is summed.
    [[nodiscard]] const Perturbation& drive(Direction d) const { return d == Direction::forward ? *f : *g; }
    /// The perturbation composed with Id + h inside the series.
    [[nodiscard]] const Perturbation& other(Direction d) const { return d == Direction::forward ? *g : *f; }
};

/// e^{lambda/2}(1+e^{-lambda/2})/(1-e^{-lambda/2}).
[[nodiscard]] double majorant_factor(double lambda);
/// q = c * majorant_factor(lambda).
[[nodiscard]] double contraction_factor(double c, double lambda);
/// Solution of q = 1.
[[nodiscard]] double max_admissible_c(double lambda);
/// 2 e^{lambda/2} * 2 e^{-(lambda/2) N} / (1 - e^{-lambda/2}): weighted tail of the series beyond N.
[[nodiscard]] double series_tail(double lambda, int N);

struct SeriesParams {
    int trunc_N = 0;
    int picard_k = 0;
    double contraction_q = 0.0;   ///< analytic q
    double effective_q = 0.0;     ///< 0 when the series term does not depend on h
    double majorant = 0.0;        ///< M_T = 2 majorant_factor; |T h|(w) <= M_T C(w)
    double c_cap = 0.0;
    double C_max = 0.0;
    double initial_norm = 0.0;    ///< C-weighted sup norm of the initial iterate
    double tail_bound = 0.0;      ///< C_max * series_tail(lambda, N)
    double picard_bound = 0.0;    ///< q^k/(1-q) (M_T + initial_norm), C-weighted
    double certified_error = 0.0; ///< absolute sup error against the exact fixed point, <= tol
    double tol = 0.0;
};

/// Chooses N and k so that truncation and iteration each contribute at most tol/2.
/// Throws HypothesisViolation(smallness) when q >= 1.
[[nodiscard]] SeriesParams choose_series_params(const ConjugacyProblem& problem, Direction direction, double tol,
                                                double initial_norm = 0.0);

/// G(sigma^{-n} w_j, n) for fibers j in [lo, hi] and |n| <= N, stored row-major.
class KernelTable {
public:
    KernelTable() = default;
    KernelTable(const Cocycle& cocycle, int lo, int hi, int N);

    [[nodiscard]] const double* at(int fiber, int n) const;
    [[nodiscard]] int lo() const noexcept { return lo_; }
    [[nodiscard]] int hi() const noexcept { return hi_; }
    [[nodiscard]] int N() const noexcept { return N_; }

private:
    int lo_ = 0, hi_ = -1, N_ = 0, d_ = 0;
    std::vector<double> data_;
};

struct SolveOptions {
    FieldFn initial;               ///< h_0; zero when empty
    double initial_norm = 0.0;     ///< its C-weighted sup norm
    bool strict_literal_mode = false;
    int picard_k_override = 0;     ///< > 0 replaces the certified k (diagnostics only)
    /// Evaluate every kernel sum term by term instead of sliding it along the orbit.
    /// Strict literal mode always does.
    bool recursive_sums = false;
    std::size_t node_cap = std::size_t{1} << 22;
};

/// Lazily evaluated Picard iterate h_k of the truncated series operator.
class ConjugacyField {
public:
    ConjugacyField(const ConjugacyProblem& problem, Direction direction, SeriesParams params,
                   SolveOptions options = {});

    struct Evaluation {
        Vec h;
        int image_fiber = 0;
        Vec image;     ///< one step of the drive dynamics from x
        Vec h_image;   ///< h at the image, from the same orbit graph
        std::size_t nodes = 0;
        int saturated = 0;
    };

    [[nodiscard]] Vec operator()(int fiber, const Vec& x) const { return evaluate(fiber, x).h; }
    [[nodiscard]] Evaluation evaluate(int fiber, const Vec& x, bool with_image = false, int depth = -1) const;

    [[nodiscard]] const SeriesParams& params() const noexcept { return params_; }
    [[nodiscard]] Direction direction() const noexcept { return direction_; }
    [[nodiscard]] const ConjugacyProblem& problem() const noexcept { return problem_; }
    [[nodiscard]] bool strict_literal_mode() const noexcept { return options_.strict_literal_mode; }

    /// Certified |h_k - h*| at a fiber.
    [[nodiscard]] double error_bound(int fiber) const;
    /// Certified sup |h*(w, .)| bound M_T C(w).
    [[nodiscard]] FiberScalar bound_T() const;

    /// Half-width of window needed around a root fiber (with one image step).
    [[nodiscard]] static int required_reach(const SeriesParams& params);

private:
    struct Context;
    [[nodiscard]] Evaluation evaluate_chain(int fiber, const Vec& x, bool with_image, int depth) const;
    void eval_h(Context& ctx, int node, int depth, double* out) const;
    void eval_p(Context& ctx, int node, int depth, double* out) const;

    ConjugacyProblem problem_;
    Direction direction_;
    SeriesParams params_;
    SolveOptions options_;
    KernelTable kernel_;
    int depth_ = 0;
};

[[nodiscard]] ConjugacyField solve_h(const ConjugacyProblem& problem, Direction direction, double tol,
                                     SolveOptions options = {});

/// p(n, w, x) (or r for the backward direction) with an explicit field h (zero when empty).
[[nodiscard]] Vec p_term(const ConjugacyProblem& problem, Direction direction, int n, int fiber, const Vec& x,
                         const FieldFn& h = {});

struct SeriesValue {
    Vec value;
    double tail_bound = 0.0;     ///< C(w) series_tail(lambda, N)
    double majorant_bound = 0.0; ///< M_T C(w)
};

/// Truncated series (T h)(w, x) with |n| <= N for an explicit field h.
[[nodiscard]] SeriesValue apply_T(const ConjugacyProblem& problem, Direction direction, const FieldFn& h, int fiber,
                                  const Vec& x, int N);

/// H(w, x) = x + h(w, x).
class Conjugacy {
public:
    explicit Conjugacy(const ConjugacyField& h) : h_(&h) {}
    [[nodiscard]] Vec operator()(int fiber, const Vec& x) const { return x + (*h_)(fiber, x); }
    [[nodiscard]] const ConjugacyField& field() const noexcept { return *h_; }

private:
    const ConjugacyField* h_;
};

[[nodiscard]] Conjugacy build_H(const ConjugacyField& h);

struct SampleSpec {
    std::vector<int> fibers;
    int per_fiber = 500;
    double radius = 2.0;
    std::uint64_t seed = 1;
};

/// Deterministic uniform samples in [-radius, radius]^d for one fiber.
[[nodiscard]] std::vector<Vec> sample_box(int dim, int fiber, int count, double radius, std::uint64_t seed);

struct FiberResidual {
    int fiber = 0;
    double max_residual = 0.0;
    double bound = 0.0;
    int samples = 0;
};

struct ResidualReport {
    std::string direction;
    double max_residual = 0.0;
    double max_bound = 0.0;
    double max_ratio = 0.0;          ///< residual / bound
    double amplification = 0.0;      ///< max ||A|| + Lip(other)
    double max_membership = 0.0;     ///< max |Pi^2 h|
    double max_bound_T_ratio = 0.0;  ///< max |h| / (M_T C)
    double max_abs_h = 0.0;
    std::size_t max_nodes = 0;
    int saturated = 0;
    int samples = 0;
    std::vector<FiberResidual> fibers;
    bool pass = false;
};

/// Residual of the conjugacy equation at sampled points.
[[nodiscard]] ResidualReport conjugacy_residual(const ConjugacyField& h, const SampleSpec& samples);

struct RoundtripReport {
    double max_backward_after_forward = 0.0;  ///< |Hbar(H(x)) - x|
    double max_forward_after_backward = 0.0;  ///< |H(Hbar(x)) - x|
    double bound_backward_after_forward = 0.0;
    double bound_forward_after_backward = 0.0;
    double lipschitz_forward = 0.0;   ///< secant estimate for h
    double lipschitz_backward = 0.0;  ///< secant estimate for hbar
    int samples = 0;
    bool pass = false;
};

[[nodiscard]] RoundtripReport homeomorphism_check(const ConjugacyField& forward, const ConjugacyField& backward,
                                                  const SampleSpec& samples);

/// Secant-based local Lipschitz estimate of a field at scales 1e-2, 1e-3, 1e-4.
[[nodiscard]] double secant_lipschitz(const ConjugacyField& h, const SampleSpec& samples, int pilots);

struct ContractionReport {
    int pairs = 0;
    int points_per_pair = 0;
    double max_ratio = 0.0;
    double q = 0.0;
    bool pass = false;
};

/// Measures ||T h1 - T h2||' / ||h1 - h2||' for random admissible sinusoidal fields
/// whose weighted distance is known in closed form.
[[nodiscard]] ContractionReport measure_contraction(const ConjugacyProblem& problem, Direction direction, int N,
                                                    const SampleSpec& samples, int pairs);

}  // namespace rdslin
