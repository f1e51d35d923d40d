#include "rdslin/holder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "rdslin/driving.hpp"
#include "rdslin/errors.hpp"
#include "rdslin/parallel.hpp"
#include "rdslin/trajectory.hpp"

namespace rdslin {

double adapted_norm(const Cocycle& cocycle, const Vec& x, int fiber, int trunc, double rho) {
    double best = x.norm();
    Vec y = x;
    for (int n = 1; n <= trunc; ++n) {
        y = cocycle.A(fiber + n - 1) * y;
        best = std::max(best, y.norm() * std::exp(-rho * n));
    }
    y = x;
    for (int n = 1; n <= trunc; ++n) {
        y = cocycle.inverse(fiber - n) * y;
        best = std::max(best, y.norm() * std::exp(-rho * n));
    }
    return best;
}

double holder_ratio(double rho, double c) {
    const double er = std::exp(rho);
    if (!(c * er < 1.0)) {
        throw HypothesisViolation(hyp::smallness, "c e^rho = " + std::to_string(c * er) +
                                                      " >= 1; the perturbed inverse bound needs c < " +
                                                      std::to_string(1.0 / er));
    }
    return (er + c) / (1.0 - c * er);
}

double holder_c_max(double lambda, double rho, double alpha, double epsilon) {
    const double Q = std::exp((lambda - 5.0 * epsilon) / alpha);
    const double er = std::exp(rho);
    return (Q - er) / (1.0 + Q * er);
}

SeriesB series_B(double lambda, double rho, double alpha, double epsilon, double c) {
    const double R = holder_ratio(rho, c);
    SeriesB b;
    b.ratio = std::exp(-lambda + 5.0 * epsilon) * std::pow(R, alpha);
    if (!(b.ratio < 1.0)) {
        throw HypothesisViolation(hyp::smallness,
                                  "series B diverges at c = " + std::to_string(c) + " (ratio " +
                                      std::to_string(b.ratio) + "); maximal admissible c = " +
                                      std::to_string(holder_c_max(lambda, rho, alpha, epsilon)));
    }
    // Term at |n| = m is (m+2) e^{5 eps} R^{2 alpha} r^m, counted twice for m >= 1.
    const double lead = std::exp(5.0 * epsilon) * std::pow(R, 2.0 * alpha);
    double sum = 2.0 * lead;
    int m = 0;
    while (true) {
        ++m;
        const double term = 2.0 * (m + 2) * lead * std::pow(b.ratio, m);
        sum += term;
        if (term < 1e-16 * sum || m > 1000000) {
            break;
        }
    }
    // Beyond m the ratio of consecutive terms is at most theta = (m+4)/(m+3) r < 1.
    const double theta = (m + 4.0) / (m + 3.0) * b.ratio;
    const double next = 2.0 * (m + 3) * lead * std::pow(b.ratio, m + 1);
    b.tail = theta < 1.0 ? next / (1.0 - theta) : std::numeric_limits<double>::infinity();
    b.terms = m;
    b.value = sum + b.tail;
    return b;
}

FiberScalar growth_budget(const DichotomyConstants& constants, double c) {
    const FiberScalar& Z = constants.Z;
    return FiberScalar::generate("c/Z(sigma)", Z.first, Z.last() - 1, [&](int k) { return c / Z[k + 1]; });
}

FiberScalar family_bound(Family family, const FiberScalar& budget, const Cocycle& cocycle) {
    if (family == Family::zero) {
        return FiberScalar::constant("D", budget.first, budget.last(), 0.0);
    }
    const FiberScalar amp = amplitude_for_budget(family, budget, cocycle);
    return make_standard(family, amp, cocycle, budget).bound_D();
}

HolderBudget compute_budget(const DichotomyConstants& constants, const FiberScalar& D_upper, double alpha, double c) {
    if (!constants.has_growth) {
        throw HypothesisViolation(hyp::growth, "Hoelder budget needs an invertible cocycle with a growth bound");
    }
    HolderBudget b;
    b.alpha = alpha;
    b.alpha0 = constants.alpha0();
    b.c_base = c;
    if (!(alpha > 0.0 && alpha < b.alpha0)) {
        throw HypothesisViolation(hyp::holder_budget, "alpha = " + std::to_string(alpha) +
                                                          " must lie in (0, alpha0) with alpha0 = " +
                                                          std::to_string(b.alpha0));
    }
    const double lambda = constants.lambda, rho = constants.rho;
    b.epsilon = (lambda - alpha * rho) / 20.0;
    b.c_max = holder_c_max(lambda, rho, alpha, b.epsilon);
    b.R = holder_ratio(rho, c);
    b.B = series_B(lambda, rho, alpha, b.epsilon, c);
    b.N = envelope_N(constants.K, constants.M, constants.Z, D_upper, b.epsilon);
    const FiberScalar& N = b.N.value;
    const FiberScalar& Z = constants.Z;
    const int lo = std::max(N.first, Z.first);
    const int hi = std::min(N.last(), Z.last() - 1);
    if (lo > hi) {
        throw ConfigError("window too small for the smallness function");
    }
    b.d_formula = FiberScalar::generate("d_formula", lo, hi, [&](int k) {
        return std::pow(c / (12.0 * b.B.value * std::pow(N[k], 3.0)), 1.0 / alpha);
    });
    b.d = FiberScalar::generate("d", lo, hi, [&](int k) {
        const double cap_z = c / Z[k + 1];
        const double cap_one = 1.0 - 1e-9;
        const double f = b.d_formula[k];
        if (cap_z < f && cap_z <= cap_one) {
            ++b.capped_by_Z;
        } else if (cap_one < f && cap_one < cap_z) {
            ++b.capped_by_one;
        }
        return std::min({f, cap_z, cap_one});
    });
    return b;
}

bool InequalityReport::pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const InequalityCheck& c) { return c.pass; });
}

const InequalityCheck* InequalityReport::find(const std::string& name) const {
    for (const auto& c : checks) {
        if (c.name == name) {
            return &c;
        }
    }
    return nullptr;
}

namespace {

struct Sampler {
    std::mt19937_64 rng;
    int dim;
    double radius;
    std::normal_distribution<double> gauss{0.0, 1.0};
    std::uniform_real_distribution<double> unit{0.0, 1.0};

    Sampler(std::uint64_t seed, int dim_, double radius_) : rng(splitmix64(seed)), dim(dim_), radius(radius_) {}

    Vec box() {
        Vec x(dim);
        for (int i = 0; i < dim; ++i) x(i) = radius * (2.0 * unit(rng) - 1.0);
        return x;
    }
    Vec direction() {
        Vec u(dim);
        for (int i = 0; i < dim; ++i) u(i) = gauss(rng);
        return u / u.norm();
    }
    /// Separation log-uniform over six decades below the radius.
    double separation() { return radius * std::pow(10.0, -6.0 * unit(rng)); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
};

class Tally {
public:
    explicit Tally(std::string name) { check_.name = std::move(name); }
    void add(double lhs, double rhs) {
        ++check_.samples;
        double r = 0.0;
        if (lhs > 0.0) {
            r = rhs > 0.0 ? lhs / rhs : std::numeric_limits<double>::infinity();
        }
        check_.max_ratio = std::max(check_.max_ratio, r);
    }
    /// Tight bounds (sup-defined constants) can tie up to roundoff.
    InequalityCheck done() {
        check_.pass = check_.max_ratio <= 1.0 + 1e-12;
        return check_;
    }

private:
    InequalityCheck check_;
};

}  // namespace

InequalityReport verify_trajectory_estimates(const Cocycle& cocycle, const DichotomyConstants& constants,
                                             const HolderBudget& budget, const Perturbation& f,
                                             const SuiteOptions& options) {
    const double rho = constants.rho;
    const double c = budget.c_base;
    const double er = std::exp(rho);
    const FiberScalar& N = budget.N.value;
    const FiberScalar& Z = constants.Z;
    const int d = cocycle.dim();
    const int T = options.trunc;
    const int nf = static_cast<int>(options.fibers.size());
    Sampler s(options.seed, d, options.radius);

    Tally sandwich("adapted-norm sandwich"), growth("one-step growth"), center("center deviation"),
        future("future deviation"), past("past deviation"), inverse("perturbed inverse");

    for (int i = 0; i < options.samples; ++i) {
        const int w = options.fibers[static_cast<std::size_t>(i % nf)];
        const Vec x = s.box();
        const double an = adapted_norm(cocycle, x, w, T, rho);
        sandwich.add(x.norm(), an);
        sandwich.add(an, Z[w] * x.norm());

        const int n = s.integer(-options.max_n, options.max_n);
        const Vec y = cocycle.evolve_full(w, n) * x;
        growth.add(adapted_norm(cocycle, y, w + n, T, rho),
                   std::exp(rho * std::abs(n)) * adapted_norm(cocycle, x, w, T + std::abs(n), rho));

        const Vec z = x + s.separation() * s.direction();
        const double dist = (x - z).norm();
        const SplitPoint px = split(cocycle, x, w);
        const SplitPoint pz = split(cocycle, z, w);
        center.add((evolve_center(cocycle, px.eta, w, n) - evolve_center(cocycle, pz.eta, w, n)).norm(),
                   N[w] * std::exp(rho * std::abs(n)) * dist);

        const int m = s.integer(1, options.max_n);
        const Vec fx = evolve_coupled(cocycle, f, px, m).xi;
        const Vec fz = evolve_coupled(cocycle, f, pz, m).xi;
        future.add((fx - fz).norm(), m * N[w] * std::pow(er + c, m) * dist);
        const Vec bx = evolve_coupled(cocycle, f, px, -m).xi;
        const Vec bz = evolve_coupled(cocycle, f, pz, -m).xi;
        past.add((bx - bz).norm(), m * N[w] * std::pow(er / (1.0 - c * er), m + 1) * dist);

        // Inverse of F_w^eta on E^{s,u}(sigma w) for two center offsets and targets.
        const Mat& P2 = cocycle.projection(w, 2);
        const Mat& Psu1 = cocycle.su_projection(w + 1);
        const Vec eta = P2 * s.box();
        const Vec theta = P2 * s.box();
        const Vec xi = Psu1 * s.box();
        const Vec zeta = Psu1 * s.box();
        const Vec ix = invert_fiber_map(PerturbedMap{cocycle, f, w, eta}, xi).xi;
        const Vec iz = invert_fiber_map(PerturbedMap{cocycle, f, w, theta}, zeta).xi;
        inverse.add(adapted_norm(cocycle, ix - iz, w, T, rho),
                    er / (1.0 - c * er) * (adapted_norm(cocycle, xi - zeta, w + 1, T + 1, rho) + (eta - theta).norm()));
    }
    InequalityReport rep;
    rep.checks = {sandwich.done(), growth.done(), center.done(), future.done(), past.done(), inverse.done()};
    return rep;
}

FieldFn holder_test_field(const Cocycle& cocycle, double alpha, std::uint64_t seed) {
    Sampler s(seed, cocycle.dim(), 1.0);
    const Vec w = s.direction();
    const Vec v = s.direction();
    const Cocycle* cp = &cocycle;
    return [cp, w, v, alpha](int fiber, const Vec& x) {
        const double t = w.dot(x);
        const double phi = std::clamp(std::copysign(std::pow(std::abs(t), alpha), t), -1.0, 1.0);
        Vec e = cp->su_projection(fiber) * v;
        const double en = e.norm();
        if (en > 0.0) {
            e /= en;
        }
        // |phi(t) - phi(s)| <= 2^{1-alpha} |t - s|^alpha, so the factor 1/2 keeps the constant <= 1.
        return Vec(0.5 * phi * e);
    };
}

InequalityReport verify_term_estimates(const ConjugacyProblem& problem, const HolderBudget& budget, const FieldFn& h,
                                       const SuiteOptions& options) {
    const Cocycle& cocycle = *problem.cocycle;
    const Perturbation& f = *problem.f;
    const Perturbation& g = *problem.g;
    const double alpha = budget.alpha;
    const double eps = budget.epsilon;
    const double R = budget.R;
    const FiberScalar& N = budget.N.value;
    const FiberScalar& dd = budget.d;
    const int nf = static_cast<int>(options.fibers.size());
    Sampler s(options.seed ^ 0x7e57ULL, cocycle.dim(), options.radius);

    Tally fh("f hoelder"), gh("g hoelder"), xt("composed trajectory"), pt("term p");
    for (int i = 0; i < options.samples; ++i) {
        const int w = options.fibers[static_cast<std::size_t>(i % nf)];
        const Vec x = s.box();
        const Vec z = x + s.separation() * s.direction();
        const double dist = (x - z).norm();
        const double da = std::pow(dist, alpha);
        fh.add((f(w, x) - f(w, z)).norm(), N[w] * std::pow(dd[w], alpha) * da);
        gh.add((g(w, x) - g(w, z)).norm(), N[w] * std::pow(dd[w], alpha) * da);

        const int n = s.integer(-options.max_n, options.max_n);
        const SplitPoint px = split(cocycle, x, w);
        const SplitPoint pz = split(cocycle, z, w);
        const Vec tx = evolve_coupled(cocycle, f, px, n).point();
        const Vec tz = evolve_coupled(cocycle, f, pz, n).point();
        xt.add((tx - tz).norm(), 2.0 * (std::abs(n) + 1) * N[w] * std::pow(R, std::abs(n) + 1) * dist);

        const Vec p1 = p_term(problem, Direction::forward, n, w, x, h);
        const Vec p2 = p_term(problem, Direction::forward, n, w, z, h);
        const int an = std::abs(n);
        pt.add((p1 - p2).norm(), 6.0 * (an + 2) * N[w] * N[w] * std::pow(dd[w - (n + 1)], alpha) *
                                     std::exp(eps * (an + 1)) * std::pow(R, (an + 2) * alpha) * da);
    }
    InequalityReport rep;
    rep.checks = {fh.done(), gh.done(), xt.done(), pt.done()};
    return rep;
}

InequalityCheck holder_stability(const ConjugacyProblem& problem, const HolderBudget& budget, const FieldFn& h,
                                 int trunc_N, const SuiteOptions& options) {
    const int nf = static_cast<int>(options.fibers.size());
    Sampler s(options.seed ^ 0x5747ULL, problem.cocycle->dim(), options.radius);
    struct Job {
        int w;
        Vec x, z;
    };
    std::vector<Job> jobs;
    for (int i = 0; i < options.samples; ++i) {
        const int w = options.fibers[static_cast<std::size_t>(i % nf)];
        Vec x = s.box();
        Vec z = x + s.separation() * s.direction();
        jobs.push_back({w, std::move(x), std::move(z)});
    }
    std::vector<std::pair<double, double>> out(jobs.size());
    parallel_for(jobs.size(), [&](std::size_t i) {
        const Job& j = jobs[i];
        const Vec a = apply_T(problem, Direction::forward, h, j.w, j.x, trunc_N).value;
        const Vec b = apply_T(problem, Direction::forward, h, j.w, j.z, trunc_N).value;
        out[i] = {(a - b).norm(), std::pow((j.x - j.z).norm(), budget.alpha)};
    });
    Tally t("series hoelder stability");
    for (const auto& [l, r] : out) {
        t.add(l, r);
    }
    return t.done();
}

double holder_constant(double radius) { return std::max(2.0 * radius, 1.0) + 1.0; }

HolderReport fit_holder(std::vector<HolderPair> pairs, double alpha, double radius) {
    if (pairs.size() < 200) {
        throw ConfigError("Hoelder fit needs at least 200 pairs, got " + std::to_string(pairs.size()));
    }
    HolderReport rep;
    rep.alpha = alpha;
    rep.radius = radius;
    rep.T = holder_constant(radius);
    rep.min_distance = std::numeric_limits<double>::infinity();
    for (const auto& p : pairs) {
        rep.min_distance = std::min(rep.min_distance, p.distance);
        rep.max_distance = std::max(rep.max_distance, p.distance);
    }
    if (!(rep.min_distance > 1e-9)) {
        throw ConfigError("Hoelder pair distances must exceed 1e-9");
    }
    rep.dyadic_span = std::log2(rep.max_distance / rep.min_distance);
    if (!(rep.dyadic_span >= 4.0)) {
        throw ConfigError("Hoelder pair distances span " + std::to_string(rep.dyadic_span) +
                          " dyadic scales; at least 4 are needed");
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (const auto& p : pairs) {
        rep.max_bound_ratio = std::max(rep.max_bound_ratio, p.image_distance / (rep.T * std::pow(p.distance, alpha)));
        if (p.image_distance > 0.0) {
            const double lx = std::log(p.distance), ly = std::log(p.image_distance);
            sx += lx;
            sy += ly;
            sxx += lx * lx;
            sxy += lx * ly;
            ++m;
        }
    }
    if (m >= 2) {
        const double den = m * sxx - sx * sx;
        rep.slope = (m * sxy - sx * sy) / den;
        rep.intercept = (sy - rep.slope * sx) / m;
    }
    rep.pairs = std::move(pairs);
    rep.pass = m >= 2 && rep.slope >= alpha - 0.05 && rep.max_bound_ratio <= 1.0;
    return rep;
}

HolderReport empirical_holder(const PointMap& H, int dim, double radius, int pairs, double alpha, std::uint64_t seed) {
    Sampler s(seed ^ 0x401dULL, dim, radius);
    std::vector<std::pair<Vec, Vec>> pts;
    for (int i = 0; i < pairs; ++i) {
        const double r = 0.5 * radius * std::pow(s.unit(s.rng), 1.0 / dim);
        Vec x = r * s.direction();
        const double delta = 0.5 * radius * std::pow(2.0, -20.0 * s.unit(s.rng));
        Vec z = x + delta * s.direction();
        pts.emplace_back(std::move(x), std::move(z));
    }
    std::vector<HolderPair> out(pts.size());
    parallel_for(pts.size(), [&](std::size_t i) {
        const auto& [x, z] = pts[i];
        out[i] = {(x - z).norm(), (H(x) - H(z)).norm()};
    });
    return fit_holder(std::move(out), alpha, radius);
}

}  // namespace rdslin
