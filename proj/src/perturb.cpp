#include "rdslin/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "rdslin/driving.hpp"
#include "rdslin/errors.hpp"

namespace rdslin {

std::string to_string(Family f) {
    switch (f) {
        case Family::zero: return "zero";
        case Family::tanh: return "tanh";
        case Family::sine: return "sine";
        case Family::bump: return "bump";
        case Family::custom: return "custom";
    }
    return "unknown";
}

Family parse_family(std::string_view name) {
    if (name == "zero") return Family::zero;
    if (name == "tanh") return Family::tanh;
    if (name == "sine") return Family::sine;
    if (name == "bump") return Family::bump;
    throw ConfigError("unknown perturbation family '" + std::string(name) + "'");
}

double base_lipschitz(Family f) {
    switch (f) {
        case Family::zero: return 0.0;
        case Family::tanh:
        case Family::sine:
        case Family::bump: return 1.0;
        case Family::custom: break;
    }
    throw ConfigError("custom perturbations have no base Lipschitz constant");
}

double base_sup(Family f, int dim) {
    switch (f) {
        case Family::zero: return 0.0;
        case Family::tanh:
        case Family::sine: return std::sqrt(static_cast<double>(dim));
        case Family::bump: return std::exp(-0.5);  // sup of r e^{-r^2/2}
        case Family::custom: break;
    }
    throw ConfigError("custom perturbations have no base sup");
}

std::size_t Perturbation::index(int fiber) const {
    if (!defined_at(fiber)) {
        throw TruncationError("perturbation undefined at fiber " + std::to_string(fiber));
    }
    return static_cast<std::size_t>(fiber - first_);
}

void Perturbation::eval(int fiber, const double* x, double* out) const {
    const std::size_t i = index(fiber);
    const int d = dim_;
    double b[kMaxDim];
    switch (family_) {
        case Family::zero:
            std::fill(out, out + d, 0.0);
            return;
        case Family::custom: {
            Vec xv = Eigen::Map<const Vec>(x, d);
            const Vec v = custom_(fiber, xv);
            std::copy(v.data(), v.data() + d, out);
            return;
        }
        case Family::tanh:
            for (int j = 0; j < d; ++j) b[j] = std::tanh(x[j]);
            break;
        case Family::sine:
            for (int j = 0; j < d; ++j) b[j] = std::sin(x[j]);
            break;
        case Family::bump: {
            double r2 = 0.0;
            for (int j = 0; j < d; ++j) r2 += x[j] * x[j];
            const double w = std::exp(-0.5 * r2);
            for (int j = 0; j < d; ++j) b[j] = x[j] * w;
            break;
        }
    }
    const double amp = amplitude_[i];
    const Mat& p = range_projector_[i];
    for (int r = 0; r < d; ++r) {
        double acc = 0.0;
        for (int j = 0; j < d; ++j) acc += p(r, j) * b[j];
        out[r] = amp * acc;
    }
}

Vec Perturbation::operator()(int fiber, const Vec& x) const {
    Vec out(dim_);
    eval(fiber, x.data(), out.data());
    return out;
}

double Perturbation::amplitude(int fiber) const { return amplitude_[index(fiber)]; }
double Perturbation::lipschitz(int fiber) const { return lipschitz_[index(fiber)]; }
double Perturbation::bound(int fiber) const { return bound_[index(fiber)]; }
double Perturbation::budget(int fiber) const { return budget_[index(fiber)]; }

FiberScalar Perturbation::bound_D() const { return FiberScalar("D", first_, bound_); }
FiberScalar Perturbation::lipschitz_scalar() const { return FiberScalar("Lip", first_, lipschitz_); }

Perturbation make_zero(const Cocycle& cocycle) {
    Perturbation p;
    p.family_ = Family::zero;
    p.dim_ = cocycle.dim();
    p.first_ = cocycle.first();
    const auto n = static_cast<std::size_t>(cocycle.last() - cocycle.first());
    p.amplitude_.assign(n, 0.0);
    p.lipschitz_.assign(n, 0.0);
    p.bound_.assign(n, 0.0);
    p.budget_.assign(n, 0.0);
    p.range_projector_.assign(n, Mat::Zero(p.dim_, p.dim_));
    return p;
}

Perturbation make_standard(Family family, const FiberScalar& amplitude, const Cocycle& cocycle,
                           const FiberScalar& lip_budget) {
    if (family == Family::custom) {
        throw ConfigError("make_standard does not build custom perturbations");
    }
    Perturbation p = make_zero(cocycle);
    p.family_ = family;
    const double lip_base = base_lipschitz(family);
    const double sup_base = base_sup(family, p.dim_);
    bool all_zero = true;
    for (int k = p.first(); k <= p.last(); ++k) {
        const auto i = static_cast<std::size_t>(k - p.first_);
        const double eps = amplitude[k];
        if (!(eps >= 0.0) || !std::isfinite(eps)) {
            throw ConfigError("perturbation amplitude must be finite and nonnegative");
        }
        const Mat& proj = cocycle.su_projection(k + 1);
        const double pn = spectral_norm(proj);
        p.amplitude_[i] = eps;
        p.range_projector_[i] = proj;
        p.lipschitz_[i] = eps * lip_base * pn;
        p.bound_[i] = eps * sup_base * pn;
        p.budget_[i] = lip_budget[k];
        if (p.lipschitz_[i] > p.budget_[i] * (1.0 + 1e-12)) {
            throw HypothesisViolation(hyp::lipschitz,
                                      "Lipschitz constant " + std::to_string(p.lipschitz_[i]) + " at fiber " +
                                          std::to_string(k) + " exceeds budget " + std::to_string(p.budget_[i]));
        }
        all_zero = all_zero && eps == 0.0;
    }
    if (all_zero) {
        p.family_ = Family::zero;
    }
    return p;
}

Perturbation make_custom(Perturbation::CustomFn fn, const Cocycle& cocycle, const FiberScalar& lipschitz,
                         const FiberScalar& bound, const FiberScalar& budget) {
    Perturbation p = make_zero(cocycle);
    p.family_ = Family::custom;
    p.custom_ = std::move(fn);
    for (int k = p.first(); k <= p.last(); ++k) {
        const auto i = static_cast<std::size_t>(k - p.first_);
        p.lipschitz_[i] = lipschitz[k];
        p.bound_[i] = bound[k];
        p.budget_[i] = budget[k];
        p.range_projector_[i] = cocycle.su_projection(k + 1);
        p.amplitude_[i] = 1.0;
    }
    return p;
}

FiberScalar amplitude_for_budget(Family family, const FiberScalar& lip_budget, const Cocycle& cocycle) {
    const int lo = std::max(lip_budget.first, cocycle.first());
    const int hi = std::min(lip_budget.last(), cocycle.last() - 1);
    if (family == Family::zero) {
        return FiberScalar::constant("eps", lo, hi, 0.0);
    }
    const double lip_base = base_lipschitz(family);
    return FiberScalar::generate("eps", lo, hi, [&](int k) {
        return lip_budget[k] / (lip_base * spectral_norm(cocycle.su_projection(k + 1)));
    });
}

Tower make_tower(const FiberScalar& d_regular, const FiberScalar& K, double c, double rho, Family family,
                 const Cocycle& cocycle, std::optional<double> threshold) {
    Tower out;
    if (threshold) {
        out.threshold = *threshold;
    } else {
        std::vector<double> sorted = d_regular.values;
        std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2),
                         sorted.end());
        out.threshold = sorted[sorted.size() / 2];
    }
    const double t = out.threshold;
    const int lo = std::max(d_regular.first, cocycle.first());
    const int hi = std::min(d_regular.last(), cocycle.last()) - 1;
    std::vector<char> in_a(static_cast<std::size_t>(hi - lo + 2), 0);
    bool any = false;
    for (int k = lo; k <= hi + 1; ++k) {
        in_a[static_cast<std::size_t>(k - lo)] = d_regular[k] <= t;
        any = any || d_regular[k] <= t;
    }
    if (!any) {
        throw ConfigError("tower threshold " + std::to_string(t) + " leaves the set A empty on the window");
    }
    out.level.assign(static_cast<std::size_t>(hi - lo + 1), -1);
    out.scale = FiberScalar::constant("tower_scale", lo, hi, 0.0);
    // First-entry times by a backward sweep: level(k) = 0 if k in A, else level(k+1) + 1.
    std::optional<int> next_entry;
    if (in_a[static_cast<std::size_t>(hi + 1 - lo)]) {
        next_entry = hi + 1;
    }
    for (int k = hi; k >= lo; --k) {
        if (in_a[static_cast<std::size_t>(k - lo)]) {
            next_entry = k;
        }
        const auto i = static_cast<std::size_t>(k - lo);
        if (next_entry) {
            const int n = *next_entry - k;
            out.level[i] = n;
            out.scale.values[i] = (c / t) * std::exp(-rho * std::abs(n - 1));
        } else {
            ++out.unresolved;
            out.scale.values[i] = std::min(c / d_regular[k + 1], c / K[k + 1]);
        }
    }
    FiberScalar budget = FiberScalar::generate("budget", lo, hi, [&](int k) { return c / K[k + 1]; });
    for (int k = lo; k <= hi; ++k) {
        out.max_budget_ratio = std::max(out.max_budget_ratio, out.scale[k] / budget[k]);
    }
    const FiberScalar amp = amplitude_for_budget(family, out.scale, cocycle);
    FiberScalar full_amp = FiberScalar::constant("eps", cocycle.first(), cocycle.last() - 1, 0.0);
    FiberScalar full_budget = FiberScalar::constant("budget", cocycle.first(), cocycle.last() - 1, 0.0);
    for (int k = full_amp.first; k <= full_amp.last(); ++k) {
        if (amp.contains(k)) {
            full_amp.at(k) = amp[k];
            full_budget.at(k) = budget[k];
        }
    }
    out.f = make_standard(family, full_amp, cocycle, full_budget);
    return out;
}

PerturbationReport validate(const Perturbation& f, const Cocycle& cocycle, int samples_per_fiber, std::uint64_t seed,
                            double radius) {
    PerturbationReport rep;
    rep.samples_per_fiber = samples_per_fiber;
    const int d = f.dim();
    for (int k = f.first(); k <= f.last(); ++k) {
        ++rep.fibers;
        if (f.is_zero()) {
            continue;
        }
        std::mt19937_64 rng(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(k) + 0x51ed)));
        std::uniform_real_distribution<double> box(-radius, radius);
        std::uniform_real_distribution<double> expo(0.0, 6.0);
        std::normal_distribution<double> gauss(0.0, 1.0);
        const Mat& center = cocycle.projection(k + 1, 2);
        for (int s = 0; s < samples_per_fiber; ++s) {
            Vec x(d), u(d);
            for (int j = 0; j < d; ++j) {
                x(j) = box(rng);
                u(j) = gauss(rng);
            }
            u.normalize();
            const Vec y = x + radius * std::pow(10.0, -expo(rng)) * u;
            const Vec fx = f(k, x);
            const Vec fy = f(k, y);
            const double q = (fx - fy).norm() / (x - y).norm();
            rep.max_quotient = std::max(rep.max_quotient, q);
            const double budget = f.budget(k);
            rep.max_quotient_ratio = std::max(rep.max_quotient_ratio, budget > 0.0 ? q / budget : (q > 0 ? 1e300 : 0));
            const double bnd = f.bound(k);
            rep.max_norm_ratio = std::max(rep.max_norm_ratio, bnd > 0.0 ? fx.norm() / bnd : (fx.norm() > 0 ? 1e300 : 0));
            rep.max_center_leak = std::max(rep.max_center_leak, (center * fx).norm());
        }
    }
    rep.pass = rep.max_quotient_ratio <= 1.0 + 1e-10 && rep.max_norm_ratio <= 1.0 + 1e-12 &&
               rep.max_center_leak <= 1e-12;
    return rep;
}

Vec PerturbedMap::operator()(const Vec& xi) const {
    return cocycle.A(fiber) * xi + f(fiber, Vec(xi + eta));
}

Inversion invert_fiber_map(const PerturbedMap& F, const Vec& target, double tol, int max_iterations) {
    const Mat& ainv = F.cocycle.su_inverse(F.fiber);
    Inversion out;
    out.xi = ainv * target;
    if (F.f.is_zero()) {
        return out;
    }
    out.contraction = spectral_norm(ainv) * F.f.lipschitz(F.fiber);
    if (!(out.contraction < 1.0)) {
        throw HypothesisViolation(hyp::map_invertibility,
                                  "||A^{-1}|| Lip(f) = " + std::to_string(out.contraction) + " >= 1 at fiber " +
                                      std::to_string(F.fiber));
    }
    const double factor = out.contraction / (1.0 - out.contraction);
    const int d = F.cocycle.dim();
    Vec arg(d), fv(d), next(d);
    for (int it = 1; it <= max_iterations; ++it) {
        arg = out.xi + F.eta;
        F.f.eval(F.fiber, arg.data(), fv.data());
        next.noalias() = ainv * (target - fv);
        const double step = (next - out.xi).norm();
        out.xi = next;
        out.iterations = it;
        out.a_posteriori = factor * step;
        if (step == 0.0 || out.a_posteriori <= tol * (1.0 + out.xi.norm())) {
            return out;
        }
    }
    throw ConvergenceFailure("fiber-map inversion at fiber " + std::to_string(F.fiber) + " did not converge in " +
                             std::to_string(max_iterations) + " iterations");
}

}  // namespace rdslin
