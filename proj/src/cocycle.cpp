#include "rdslin/cocycle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rdslin/errors.hpp"

namespace rdslin {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_block(int block) {
    if (block < 1 || block > 3) {
        throw ConfigError("block index must be 1, 2 or 3");
    }
}

}  // namespace

Cocycle::Cocycle(OrbitWindow window, int dim, const MatrixFn& matrix, const SplittingFn& splitting)
    : window_(std::move(window)), dim_(dim) {
    if (dim < 1 || dim > kMaxDim) {
        throw ConfigError("state dimension must lie in [1, " + std::to_string(kMaxDim) + "]");
    }
    const std::size_t n = window_.size();
    a_.reserve(n);
    proj_.reserve(n);
    for (int k = first(); k <= last(); ++k) {
        const FiberData& fd = window_.at(k);
        Mat a = matrix(k, fd);
        ProjectionTriple p = splitting(k, fd);
        if (a.rows() != dim || a.cols() != dim) {
            throw ConfigError("cocycle matrix at offset " + std::to_string(k) + " has wrong shape");
        }
        for (const Mat& pi : p) {
            if (pi.rows() != dim || pi.cols() != dim) {
                throw ConfigError("projection at offset " + std::to_string(k) + " has wrong shape");
            }
        }
        a_.push_back(std::move(a));
        proj_.push_back(std::move(p));
    }
    compute_inverses();
}

void Cocycle::compute_inverses() {
    const std::size_t n = window_.size();
    su_proj_.assign(n, Mat());
    rank_.assign(n, {0, 0, 0});
    step_inv_.assign(n, {Mat::Zero(dim_, dim_), Mat::Zero(dim_, dim_), Mat::Zero(dim_, dim_)});
    cond_.assign(n, {1.0, 1.0, 1.0});
    su_inv_.assign(n, Mat::Zero(dim_, dim_));
    full_inv_.assign(n, Mat::Zero(dim_, dim_));
    fully_invertible_ = true;
    const Mat id = Mat::Identity(dim_, dim_);
    std::vector<std::array<Mat, 3>> bases(n);
    for (std::size_t i = 0; i < n; ++i) {
        su_proj_[i] = id - proj_[i][1];
        for (int b = 0; b < 3; ++b) {
            bases[i][b] = range_basis(proj_[i][b]);
            rank_[i][b] = static_cast<int>(bases[i][b].cols());
        }
        const double c = condition_number(a_[i]);
        if (c > kConditionCap) {
            fully_invertible_ = false;
        } else {
            full_inv_[i] = a_[i].fullPivLu().inverse();
        }
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        for (int b = 0; b < 3; ++b) {
            const Mat& u = bases[i][b];
            const Mat& v = bases[i + 1][b];
            if (u.cols() != v.cols()) {
                cond_[i][b] = std::numeric_limits<double>::infinity();
                continue;
            }
            if (u.cols() == 0) {
                continue;
            }
            const Mat m = v.transpose() * a_[i] * u;
            cond_[i][b] = condition_number(m);
            if (cond_[i][b] <= kConditionCap) {
                step_inv_[i][b] = u * m.fullPivLu().inverse() * v.transpose() * proj_[i + 1][b];
            }
        }
        su_inv_[i] = step_inv_[i][0] + step_inv_[i][2];
    }
}

std::size_t Cocycle::index(int k) const {
    if (!window_.contains(k)) {
        throw TruncationError("cocycle has no fiber at offset " + std::to_string(k) + " (window [" +
                              std::to_string(first()) + ", " + std::to_string(last()) + "])");
    }
    return static_cast<std::size_t>(k - first());
}

const Mat& Cocycle::A(int k) const { return a_[index(k)]; }

const Mat& Cocycle::projection(int k, int block) const {
    check_block(block);
    return proj_[index(k)][static_cast<std::size_t>(block - 1)];
}

const Mat& Cocycle::su_projection(int k) const { return su_proj_[index(k)]; }

int Cocycle::block_rank(int k, int block) const {
    check_block(block);
    return rank_[index(k)][static_cast<std::size_t>(block - 1)];
}

Mat Cocycle::compose(int k, int n) const {
    if (n < 0) {
        throw ConfigError("compose needs n >= 0");
    }
    if (n == 0) {
        (void)index(k);
        return Mat::Identity(dim_, dim_);
    }
    (void)index(k);
    (void)index(k + n - 1);
    return compose_cache_.get_or_compute({k, n}, [&] {
        Mat p = a_[index(k)];
        for (int j = 1; j < n; ++j) {
            p = a_[index(k + j)] * p;
        }
        return p;
    });
}

double Cocycle::block_condition(int k, int block) const {
    check_block(block);
    if (k >= last()) {
        throw TruncationError("block condition at offset " + std::to_string(k) + " needs fiber k+1");
    }
    return cond_[index(k)][static_cast<std::size_t>(block - 1)];
}

const Mat& Cocycle::step_inverse(int k, int block) const {
    const double c = block_condition(k, block);
    if (!(c <= kConditionCap)) {
        throw HypothesisViolation(hyp::block_invertibility,
                                  "block " + std::to_string(block) + " of A at offset " + std::to_string(k) +
                                      " has condition number " + std::to_string(c));
    }
    return step_inv_[index(k)][static_cast<std::size_t>(block - 1)];
}

const Mat& Cocycle::su_inverse(int k) const {
    (void)step_inverse(k, 1);
    (void)step_inverse(k, 3);
    return su_inv_[index(k)];
}

Mat Cocycle::restricted_inverse(int k, int n, int block) const {
    if (n < 1) {
        throw ConfigError("restricted_inverse needs n >= 1");
    }
    Mat p = step_inverse(k - 1, block);
    for (int j = 2; j <= n; ++j) {
        p = step_inverse(k - j, block) * p;
    }
    return p;
}

Mat Cocycle::green(int k, int n) const {
    if (n >= 0) {
        Mat p = projection(k, 1);
        for (int j = 0; j < n; ++j) {
            p = A(k + j) * p;
            if (k + j + 1 <= last()) {
                p = projection(k + j + 1, 1) * p;
            }
        }
        return p;
    }
    return -restricted_inverse(k, -n, 3);
}

const Mat& Cocycle::inverse(int k) const {
    const std::size_t i = index(k);
    if (condition_number(a_[i]) > kConditionCap) {
        throw HypothesisViolation(hyp::block_invertibility, "A is not invertible at offset " + std::to_string(k));
    }
    return full_inv_[i];
}

Mat Cocycle::evolve_full(int k, int n) const {
    if (n >= 0) {
        return compose(k, n);
    }
    Mat p = Mat::Identity(dim_, dim_);
    for (int j = 1; j <= -n; ++j) {
        p = inverse(k - j) * p;
    }
    return p;
}

void Cocycle::rotate_splitting_at(int k, double angle) {
    const std::size_t i = index(k);
    const Mat r = plane_rotation(dim_, 0, dim_ - 1, angle);
    for (Mat& pi : proj_[i]) {
        pi = r * pi * r.transpose();
    }
    compute_inverses();
}

bool HypothesisReport::pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const HypothesisCheck& c) { return c.pass; });
}

const HypothesisCheck* HypothesisReport::first_failure() const {
    for (const auto& c : checks) {
        if (!c.pass) {
            return &c;
        }
    }
    return nullptr;
}

HypothesisReport validate_hypotheses(const Cocycle& c) {
    const int d = c.dim();
    const Mat id = Mat::Identity(d, d);
    HypothesisCheck sum{"projection-sum", hyp::splitting, 0.0, 1e-10, c.first(), true};
    HypothesisCheck idem{"idempotency", hyp::splitting, 0.0, 1e-10, c.first(), true};
    HypothesisCheck cross{"complementarity", hyp::splitting, 0.0, 1e-10, c.first(), true};
    HypothesisCheck inv{"invariance", hyp::invariance, 0.0, 1e-10, c.first(), true};
    HypothesisCheck blocks{"block-invertibility", hyp::block_invertibility, 1.0, Cocycle::kConditionCap, c.first(),
                           true};
    auto record = [](HypothesisCheck& chk, double v, int k) {
        if (!(v <= chk.max_violation)) {
            chk.max_violation = v;
            chk.worst_fiber = k;
        }
    };
    for (int k = c.first(); k <= c.last(); ++k) {
        const Mat& p1 = c.projection(k, 1);
        const Mat& p2 = c.projection(k, 2);
        const Mat& p3 = c.projection(k, 3);
        record(sum, spectral_norm(p1 + p2 + p3 - id), k);
        const Mat* ps[3] = {&p1, &p2, &p3};
        for (int i = 0; i < 3; ++i) {
            const double scale = std::max(1.0, spectral_norm(*ps[i]));
            record(idem, spectral_norm((*ps[i]) * (*ps[i]) - *ps[i]) / scale, k);
            for (int j = 0; j < 3; ++j) {
                if (i != j) {
                    record(cross, spectral_norm((*ps[i]) * (*ps[j])) / scale, k);
                }
            }
        }
        if (k < c.last()) {
            const Mat& a = c.A(k);
            for (int b = 1; b <= 3; ++b) {
                const Mat& now = c.projection(k, b);
                const Mat& next = c.projection(k + 1, b);
                const double scale =
                    std::max(1.0, spectral_norm(a) * std::max(spectral_norm(now), spectral_norm(next)));
                record(inv, spectral_norm(a * now - next * a) / scale, k);
            }
            for (int b = 2; b <= 3; ++b) {
                record(blocks, c.block_condition(k, b), k);
            }
        }
    }
    HypothesisReport report;
    for (HypothesisCheck* chk : {&sum, &idem, &cross, &inv, &blocks}) {
        chk->pass = chk->max_violation <= chk->tolerance;
        report.checks.push_back(*chk);
    }
    return report;
}

namespace {

/// Log-norm profiles n -> log||.|| for n = 0..R at each fiber.
using Profiles = std::vector<std::vector<double>>;

struct PeakInfo {
    double max = kNegInf;
    bool interior = true;
};

/// Maximum of logs[n] + rate*n and whether its first (near-)attainment lies
/// in the first three quarters of the available range.
PeakInfo peak(const std::vector<double>& logs, double rate) {
    PeakInfo out;
    const std::size_t count = logs.size();
    for (std::size_t n = 0; n < count; ++n) {
        const double v = logs[n] + rate * static_cast<double>(n);
        if (v > out.max) {
            out.max = v;
        }
    }
    if (count < 9 || out.max == kNegInf) {
        return out;
    }
    const double cut = out.max - 1e-10 * std::max(1.0, std::abs(out.max));
    std::size_t first = 0;
    for (std::size_t n = 0; n < count; ++n) {
        if (logs[n] + rate * static_cast<double>(n) >= cut) {
            first = n;
            break;
        }
    }
    const std::size_t range = count - 1;
    out.interior = 4 * first <= 3 * range;
    return out;
}

struct Fit {
    bool pass = false;
    FiberScalar value;
    TemperedDiagnostic diagnostic;
};

Fit evaluate_rate(const Cocycle& c, const Profiles& fwd, const Profiles& bwd, double rate, const FiberScalar* floor,
                  const std::string& name, double threshold) {
    Fit fit;
    fit.value = FiberScalar(name, c.first(), std::vector<double>(fwd.size(), 1.0));
    bool interior = true;
    for (std::size_t i = 0; i < fwd.size(); ++i) {
        const PeakInfo a = peak(fwd[i], rate);
        const PeakInfo b = peak(bwd[i], rate);
        interior = interior && a.interior && b.interior;
        double v = std::exp(std::max(a.max, b.max));
        v = std::max(v, 1.0);
        if (floor != nullptr) {
            v = std::max(v, floor->values[i]);
        }
        fit.value.values[i] = v;
    }
    fit.diagnostic = temperedness_diagnostic(fit.value, threshold);
    fit.pass = interior && fit.diagnostic.pass;
    return fit;
}

double max_average_rate(const Profiles& p, double sign) {
    double best = 0.0;
    for (const auto& logs : p) {
        for (std::size_t n = 1; n < logs.size(); ++n) {
            if (std::isfinite(logs[n])) {
                best = std::max(best, sign * logs[n] / static_cast<double>(n));
            }
        }
    }
    return best;
}

std::vector<double> log_grid(double lo, double hi, int points) {
    std::vector<double> g(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) {
        g[static_cast<std::size_t>(i)] = lo * std::pow(hi / lo, static_cast<double>(i) / (points - 1));
    }
    return g;
}

}  // namespace

DichotomyConstants estimate_constants(const Cocycle& c, const EstimateOptions& options) {
    const int first = c.first(), last = c.last();
    const std::size_t count = static_cast<std::size_t>(last - first + 1);
    Profiles stable(count), unstable(count);
    for (int k = first; k <= last; ++k) {
        const std::size_t i = static_cast<std::size_t>(k - first);
        ScaledProduct s(c.projection(k, 1));
        stable[i].push_back(s.log_norm());
        for (int n = 1; k + n - 1 < last; ++n) {
            // Re-project each step so roundoff outside the block cannot grow.
            s.left_multiply(c.projection(k + n, 1) * c.A(k + n - 1));
            stable[i].push_back(s.log_norm());
        }
        ScaledProduct u(c.projection(k, 3));
        unstable[i].push_back(u.log_norm());
        for (int n = 1; k - n >= first; ++n) {
            u.left_multiply(c.projection(k - n, 3) * c.step_inverse(k - n, 3));
            unstable[i].push_back(u.log_norm());
        }
    }
    DichotomyConstants out;
    out.grid_points = options.grid_points;
    const double lambda_hi =
        1.5 * std::max(max_average_rate(stable, -1.0), max_average_rate(unstable, -1.0)) + options.rate_floor;
    if (!(lambda_hi > 1.5 * options.rate_floor)) {
        throw HypothesisViolation(hyp::dichotomy, "no decay on the stable or unstable blocks over the window");
    }
    const auto grid = log_grid(options.rate_floor, lambda_hi, options.grid_points);
    auto fit_lambda = [&](double rate) {
        return evaluate_rate(c, stable, unstable, rate, nullptr, "K", options.temper_threshold);
    };
    int best = -1;
    for (int g = options.grid_points - 1; g >= 0; --g) {
        if (fit_lambda(grid[static_cast<std::size_t>(g)]).pass) {
            best = g;
            break;
        }
    }
    if (best < 0) {
        throw HypothesisViolation(hyp::dichotomy, "no rate lambda > 0 certifies exponential decay on the window");
    }
    double lo = grid[static_cast<std::size_t>(best)];
    if (best + 1 < options.grid_points) {
        double hi = grid[static_cast<std::size_t>(best + 1)];
        for (int it = 0; it < options.bisection_steps; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (fit_lambda(mid).pass) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    // Snap down to nine decimals so that exact rates come out exact; smaller rates stay valid.
    const double snapped = std::floor(lo * 1e9) / 1e9;
    if (snapped > 0.0 && fit_lambda(snapped).pass) {
        lo = snapped;
    }
    Fit kfit = fit_lambda(lo);
    out.lambda = lo;
    out.K = std::move(kfit.value);
    out.K_diagnostic = std::move(kfit.diagnostic);
    out.M = FiberScalar::generate("M", first, last, [&](int k) { return 1.0 + 2.0 * out.K[k]; });

    if (!c.fully_invertible()) {
        out.has_growth = false;
        out.rho = out.lambda;
        out.Z = out.K;
        out.Z.name = "Z";
        return out;
    }
    Profiles forward(count), backward(count);
    for (int k = first; k <= last; ++k) {
        const std::size_t i = static_cast<std::size_t>(k - first);
        const Mat id = Mat::Identity(c.dim(), c.dim());
        ScaledProduct f(id);
        forward[i].push_back(0.0);
        for (int n = 1; k + n - 1 < last; ++n) {
            f.left_multiply(c.A(k + n - 1));
            forward[i].push_back(f.log_norm());
        }
        ScaledProduct b(id);
        backward[i].push_back(0.0);
        for (int n = 1; k - n >= first; ++n) {
            b.left_multiply(c.inverse(k - n));
            backward[i].push_back(b.log_norm());
        }
    }
    auto fit_rho = [&](double rate) {
        return evaluate_rate(c, forward, backward, -rate, &out.K, "Z", options.temper_threshold);
    };
    double rho = out.lambda;
    Fit zfit = fit_rho(rho);
    if (!zfit.pass) {
        const double rho_hi =
            std::max(out.lambda, 1.5 * std::max(max_average_rate(forward, 1.0), max_average_rate(backward, 1.0))) +
            1.0;
        const auto rgrid = log_grid(out.lambda, rho_hi, options.grid_points);
        int found = -1;
        for (int g = 1; g < options.grid_points; ++g) {
            if (fit_rho(rgrid[static_cast<std::size_t>(g)]).pass) {
                found = g;
                break;
            }
        }
        if (found < 0) {
            throw HypothesisViolation(hyp::growth, "no growth rate rho gives a tempered Z on the window");
        }
        double rlo = rgrid[static_cast<std::size_t>(found - 1)];
        double rhi = rgrid[static_cast<std::size_t>(found)];
        for (int it = 0; it < options.bisection_steps; ++it) {
            const double mid = 0.5 * (rlo + rhi);
            if (fit_rho(mid).pass) {
                rhi = mid;
            } else {
                rlo = mid;
            }
        }
        rho = rhi;
        const double snapped = std::ceil(rhi * 1e9) / 1e9;
        if (fit_rho(snapped).pass) {
            rho = snapped;
        }
        zfit = fit_rho(rho);
    }
    out.has_growth = true;
    out.rho = rho;
    out.Z = std::move(zfit.value);
    out.Z_diagnostic = std::move(zfit.diagnostic);
    return out;
}

ProjectionTriple coordinate_projections(const BlockLayout& layout, const Mat& basis) {
    const int d = layout.dim();
    const Mat inv = basis.fullPivLu().inverse();
    ProjectionTriple out;
    const int starts[3] = {0, layout.stable, layout.stable + layout.center};
    const int sizes[3] = {layout.stable, layout.center, layout.unstable};
    for (int b = 0; b < 3; ++b) {
        Mat e = Mat::Zero(d, d);
        for (int i = 0; i < sizes[b]; ++i) {
            e(starts[b] + i, starts[b] + i) = 1.0;
        }
        out[static_cast<std::size_t>(b)] = basis * e * inv;
    }
    return out;
}

}  // namespace rdslin
