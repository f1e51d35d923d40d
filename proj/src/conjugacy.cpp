#include "rdslin/conjugacy.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "rdslin/driving.hpp"
#include "rdslin/errors.hpp"
#include "rdslin/parallel.hpp"
#include "rdslin/trajectory.hpp"

namespace rdslin {

std::string to_string(Direction d) { return d == Direction::forward ? "forward" : "backward"; }

double majorant_factor(double lambda) {
    const double e = std::exp(-0.5 * lambda);
    return std::exp(0.5 * lambda) * (1.0 + e) / (1.0 - e);
}

double contraction_factor(double c, double lambda) { return c * majorant_factor(lambda); }

double max_admissible_c(double lambda) { return 1.0 / majorant_factor(lambda); }

double series_tail(double lambda, int N) {
    const double e = std::exp(-0.5 * lambda);
    return 2.0 * std::exp(0.5 * lambda) * 2.0 * std::exp(-0.5 * lambda * N) / (1.0 - e);
}

SeriesParams choose_series_params(const ConjugacyProblem& problem, Direction direction, double tol,
                                  double initial_norm) {
    if (!(tol > 0.0)) {
        throw ConfigError("tolerance must be positive");
    }
    SeriesParams s;
    s.tol = tol;
    s.contraction_q = contraction_factor(problem.c, problem.lambda);
    s.c_cap = max_admissible_c(problem.lambda);
    s.majorant = 2.0 * majorant_factor(problem.lambda);
    s.C_max = problem.C.max();
    s.initial_norm = initial_norm;
    if (!(s.contraction_q < 1.0)) {
        throw HypothesisViolation(hyp::smallness, "contraction factor q = " + std::to_string(s.contraction_q) +
                                                      " >= 1 for c = " + std::to_string(problem.c) +
                                                      "; maximal admissible c = " + std::to_string(s.c_cap));
    }
    s.effective_q = problem.other(direction).is_zero() ? 0.0 : s.contraction_q;
    const double q = s.effective_q;
    const double half = 0.5 * tol;
    s.trunc_N = 1;
    while (s.C_max * series_tail(problem.lambda, s.trunc_N) / (1.0 - q) > half) {
        if (++s.trunc_N > 100000) {
            throw ConvergenceFailure("no series truncation reaches the tolerance");
        }
    }
    s.picard_k = 1;
    while (s.C_max * std::pow(q, s.picard_k) * (s.majorant + initial_norm) / (1.0 - q) > half) {
        if (++s.picard_k > 10000) {
            throw ConvergenceFailure("no Picard depth reaches the tolerance");
        }
    }
    s.tail_bound = s.C_max * series_tail(problem.lambda, s.trunc_N);
    s.picard_bound = std::pow(q, s.picard_k) / (1.0 - q) * (s.majorant + initial_norm);
    s.certified_error = (s.tail_bound + s.C_max * std::pow(q, s.picard_k) * (s.majorant + initial_norm)) / (1.0 - q);
    return s;
}

KernelTable::KernelTable(const Cocycle& cocycle, int lo, int hi, int N) : lo_(lo), hi_(hi), N_(N), d_(cocycle.dim()) {
    if (lo > hi) {
        return;
    }
    const std::size_t stride = static_cast<std::size_t>(2 * N + 1) * static_cast<std::size_t>(d_ * d_);
    data_.assign(static_cast<std::size_t>(hi - lo + 1) * stride, 0.0);
    auto store = [&](int j, int n, const Mat& m) {
        double* dst = data_.data() + static_cast<std::size_t>(j - lo) * stride +
                      static_cast<std::size_t>(n + N) * static_cast<std::size_t>(d_ * d_);
        for (int r = 0; r < d_; ++r) {
            for (int c = 0; c < d_; ++c) {
                dst[r * d_ + c] = m(r, c);
            }
        }
    };
    for (int j = lo; j <= hi; ++j) {
        // n >= 0: G_j(n+1) = G_j(n) A(j-n-1) Pi^1(j-n-1), exact by invariance and
        // free of the cancellation a product of full matrices would suffer.
        Mat g = cocycle.projection(j, 1);
        store(j, 0, g);
        for (int n = 0; n < N; ++n) {
            g = g * (cocycle.A(j - n - 1) * cocycle.projection(j - n - 1, 1));
            store(j, n + 1, g);
        }
        // n < 0: G_j(-m) = -R3(j) R3(j+1) ... R3(j+m-1).
        Mat p = cocycle.step_inverse(j, 3);
        store(j, -1, -p);
        for (int m = 1; m < N; ++m) {
            p = p * cocycle.step_inverse(j + m, 3);
            store(j, -(m + 1), -p);
        }
    }
}

const double* KernelTable::at(int fiber, int n) const {
    if (fiber < lo_ || fiber > hi_ || n < -N_ || n > N_) {
        throw TruncationError("kernel requested at fiber " + std::to_string(fiber) + ", n = " + std::to_string(n) +
                              " outside the precomputed range");
    }
    const std::size_t stride = static_cast<std::size_t>(2 * N_ + 1) * static_cast<std::size_t>(d_ * d_);
    return data_.data() + static_cast<std::size_t>(fiber - lo_) * stride +
           static_cast<std::size_t>(n + N_) * static_cast<std::size_t>(d_ * d_);
}

namespace {

inline void add_matvec(const double* g, const double* v, double* acc, int d) {
    for (int r = 0; r < d; ++r) {
        double s = 0.0;
        for (int c = 0; c < d; ++c) {
            s += g[r * d + c] * v[c];
        }
        acc[r] += s;
    }
}

}  // namespace

struct ConjugacyField::Context {
    OrbitGraph graph;
    int d;
    int slots;
    std::vector<double> h, p, drive;
    std::vector<char> h_done, p_done, drive_done;

    Context(const Cocycle& c, const Perturbation& drive_map, std::size_t cap, int slots_)
        : graph(c, drive_map, cap), d(c.dim()), slots(slots_) {}

    void ensure() {
        if (graph.size() > drive_done.size()) {
            grow();
        }
    }
    [[gnu::noinline]] void grow() {
        const std::size_t n = graph.size();
        const std::size_t size = std::max<std::size_t>(n, 2 * drive_done.size());
        h.resize(size * slots * d);
        p.resize(size * slots * d);
        drive.resize(size * d);
        h_done.resize(size * slots, 0);
        p_done.resize(size * slots, 0);
        drive_done.resize(size, 0);
    }
    std::size_t slot(int node, int depth) const {
        return static_cast<std::size_t>(node) * static_cast<std::size_t>(slots) + static_cast<std::size_t>(depth);
    }
};

int ConjugacyField::required_reach(const SeriesParams& params) {
    return params.picard_k * (params.trunc_N + 1) + 4;
}

ConjugacyField::ConjugacyField(const ConjugacyProblem& problem, Direction direction, SeriesParams params,
                               SolveOptions options)
    : problem_(problem), direction_(direction), params_(params), options_(std::move(options)) {
    if (direction_ == Direction::forward) {
        options_.strict_literal_mode = false;
    }
    depth_ = options_.picard_k_override > 0 ? options_.picard_k_override : params_.picard_k;
    const Cocycle& c = *problem_.cocycle;
    const int N = params_.trunc_N;
    kernel_ = KernelTable(c, c.first() + N, c.last() - N, N);
}

double ConjugacyField::error_bound(int fiber) const {
    const double q = params_.effective_q;
    const double tail = series_tail(problem_.lambda, params_.trunc_N);
    return problem_.C[fiber] * (tail + std::pow(q, depth_) * (params_.majorant + params_.initial_norm)) / (1.0 - q);
}

FiberScalar ConjugacyField::bound_T() const {
    FiberScalar t = problem_.C;
    t.name = "T";
    for (double& v : t.values) {
        v *= params_.majorant;
    }
    return t;
}

void ConjugacyField::eval_p(Context& ctx, int node, int depth, double* out) const {
    const int d = ctx.d;
    ctx.ensure();
    const std::size_t s = ctx.slot(node, depth);
    if (ctx.p_done[s]) {
        std::copy_n(&ctx.p[s * d], d, out);
        return;
    }
    const Perturbation& drive = problem_.drive(direction_);
    const Perturbation& other = problem_.other(direction_);
    const bool strict = options_.strict_literal_mode;
    const int fib = ctx.graph.fiber(node);
    const SplitPoint sp = ctx.graph.split_point(node);
    const Vec x = ctx.graph.point(node);
    const auto ni = static_cast<std::size_t>(node);
    if (!ctx.drive_done[ni]) {
        drive.eval(fib, strict ? sp.xi.data() : x.data(), &ctx.drive[ni * d]);
        ctx.drive_done[ni] = 1;
    }
    double dv[kMaxDim];
    std::copy_n(&ctx.drive[ni * d], d, dv);
    double val[kMaxDim];
    if (other.is_zero()) {
        for (int i = 0; i < d; ++i) val[i] = -dv[i];
    } else {
        int arg = node;
        if (strict) {
            SplitPoint q{fib, sp.xi, Vec::Zero(d)};
            arg = ctx.graph.intern(q);
        }
        double hv[kMaxDim];
        eval_h(ctx, arg, depth, hv);
        double y[kMaxDim], ov[kMaxDim];
        for (int i = 0; i < d; ++i) y[i] = x(i) + hv[i];
        other.eval(fib, y, ov);
        for (int i = 0; i < d; ++i) val[i] = ov[i] - dv[i];
    }
    ctx.ensure();
    std::copy_n(val, d, &ctx.p[s * d]);
    ctx.p_done[s] = 1;
    std::copy_n(val, d, out);
}

void ConjugacyField::eval_h(Context& ctx, int node, int depth, double* out) const {
    const int d = ctx.d;
    if (depth == 0) {
        if (options_.initial) {
            const Vec v = options_.initial(ctx.graph.fiber(node), ctx.graph.point(node));
            std::copy_n(v.data(), d, out);
        } else {
            std::fill_n(out, d, 0.0);
        }
        return;
    }
    ctx.ensure();
    const std::size_t s = ctx.slot(node, depth);
    if (ctx.h_done[s]) {
        std::copy_n(&ctx.h[s * d], d, out);
        return;
    }
    const int N = params_.trunc_N;
    const int fib = ctx.graph.fiber(node);
    const std::size_t dd = static_cast<std::size_t>(d) * static_cast<std::size_t>(d);
    const double* g0 = kernel_.at(fib, 0);  // rows n in [-N, N] are contiguous around this one
    double acc[kMaxDim] = {0.0};
    double buf[kMaxDim];
    auto term = [&](int u, std::ptrdiff_t n) {
        ctx.ensure();
        const std::size_t ps = ctx.slot(u, depth - 1);
        const double* pv = buf;
        if (ctx.p_done[ps]) {
            pv = &ctx.p[ps * static_cast<std::size_t>(d)];
        } else {
            eval_p(ctx, u, depth - 1, buf);
        }
        add_matvec(g0 + n * static_cast<std::ptrdiff_t>(dd), pv, acc, d);
    };
    int u = node;
    for (int n = 0; n <= N; ++n) {
        u = ctx.graph.prev(u);
        term(u, n);
    }
    u = node;
    for (int m = 1; m <= N; ++m) {
        term(u, -m);
        if (m < N) {
            u = ctx.graph.next(u);
        }
    }
    ctx.ensure();
    std::copy_n(acc, d, &ctx.h[s * d]);
    ctx.h_done[s] = 1;
    std::copy_n(acc, d, out);
}

ConjugacyField::Evaluation ConjugacyField::evaluate(int fiber, const Vec& x, bool with_image, int depth) const {
    if (depth < 0) {
        depth = depth_;
    }
    const Cocycle& c = *problem_.cocycle;
    if (x.size() != c.dim()) {
        throw ConfigError("evaluation point has dimension " + std::to_string(x.size()) + ", expected " +
                          std::to_string(c.dim()));
    }
    if (!options_.strict_literal_mode && !options_.recursive_sums) {
        return evaluate_chain(fiber, x, with_image, depth);
    }
    Context ctx(c, problem_.drive(direction_), options_.node_cap, depth + 2);
    Evaluation ev;
    const int root = ctx.graph.intern(fiber, x);
    ev.h = Vec(c.dim());
    eval_h(ctx, root, depth, ev.h.data());
    if (with_image) {
        const int img = ctx.graph.next(root);
        ev.image_fiber = ctx.graph.fiber(img);
        ev.image = ctx.graph.point(img);
        ev.h_image = Vec(c.dim());
        eval_h(ctx, img, depth, ev.h_image.data());
    }
    ev.nodes = ctx.graph.size();
    ev.saturated = ctx.graph.saturated();
    return ev;
}

/// Outside strict mode every series term at a node depends on h at that same node, so
/// all iterates live on the single drive orbit through x. Level i is needed on orbit
/// positions [-(k-i)(N+1), e + (k-i)(N-1)], and the two kernel sums slide along it:
///   S(t+1) = Pi^1 [p(t) + A (S(t) - G(N) p(t-N-1))],
///   U(t-1) = Pi^3 [-R3 p(t-1) + R3 (U(t) + R(N) p(t+N-1))],
/// which is exact by invariance of the splitting.
ConjugacyField::Evaluation ConjugacyField::evaluate_chain(int fiber, const Vec& x, bool with_image,
                                                          int depth) const {
    const Cocycle& c = *problem_.cocycle;
    const Perturbation& drive = problem_.drive(direction_);
    const Perturbation& other = problem_.other(direction_);
    const int d = c.dim();
    const int N = params_.trunc_N;
    const int K = depth;
    const int e = with_image ? 1 : 0;
    const int lo = -K * (N + 1);
    const int hi = e + K * std::max(N - 1, 0);
    const auto len = static_cast<std::size_t>(hi - lo + 1);
    const auto ud = static_cast<std::size_t>(d);

    OrbitGraph graph(c, drive, options_.node_cap);
    std::vector<int> chain(len);
    const int root = graph.intern(fiber, x);
    chain[static_cast<std::size_t>(-lo)] = root;
    for (int t = -1; t >= lo; --t) {
        chain[static_cast<std::size_t>(t - lo)] = graph.prev(chain[static_cast<std::size_t>(t + 1 - lo)]);
    }
    for (int t = 1; t <= hi; ++t) {
        chain[static_cast<std::size_t>(t - lo)] = graph.next(chain[static_cast<std::size_t>(t - 1 - lo)]);
    }
    auto at = [&](std::vector<double>& v, int t) { return v.data() + static_cast<std::size_t>(t - lo) * ud; };

    std::vector<double> h(len * ud, 0.0), p(len * ud, 0.0), dv(len * ud, 0.0);
    for (int t = lo; t <= hi; ++t) {
        const int node = chain[static_cast<std::size_t>(t - lo)];
        drive.eval(graph.fiber(node), graph.point(node).data(), at(dv, t));
        if (options_.initial) {
            const Vec v = options_.initial(graph.fiber(node), graph.point(node));
            std::copy_n(v.data(), d, at(h, t));
        }
    }

    std::vector<double> S(len * ud), U(len * ud);
    Vec tmp(d), acc(d);
    for (int i = 1; i <= K; ++i) {
        const int plo = lo + (i - 1) * (N + 1);
        const int phi = hi - (i - 1) * std::max(N - 1, 0);
        for (int t = plo; t <= phi; ++t) {
            const int node = chain[static_cast<std::size_t>(t - lo)];
            double* pt = at(p, t);
            const double* dt = at(dv, t);
            if (other.is_zero()) {
                for (int r = 0; r < d; ++r) pt[r] = -dt[r];
            } else {
                double y[kMaxDim], ov[kMaxDim];
                const Vec& xt = graph.point(node);
                const double* ht = at(h, t);
                for (int r = 0; r < d; ++r) y[r] = xt(r) + ht[r];
                other.eval(graph.fiber(node), y, ov);
                for (int r = 0; r < d; ++r) pt[r] = ov[r] - dt[r];
            }
        }
        const int a = plo + N + 1;
        const int b = phi - std::max(N - 1, 0);
        auto fib = [&](int t) { return graph.fiber(chain[static_cast<std::size_t>(t - lo)]); };

        // Stable sum at the left end, then forward.
        {
            const int j = fib(a);
            double* s0 = at(S, a);
            std::fill_n(s0, d, 0.0);
            for (int n = 0; n <= N; ++n) add_matvec(kernel_.at(j, n), at(p, a - n - 1), s0, d);
        }
        for (int t = a; t < b; ++t) {
            const int j = fib(t);
            const double* gN = kernel_.at(j, N);
            Eigen::Map<const Vec> st(at(S, t), d);
            for (int r = 0; r < d; ++r) tmp(r) = st(r);
            double out[kMaxDim] = {0.0};
            add_matvec(gN, at(p, t - N - 1), out, d);
            for (int r = 0; r < d; ++r) tmp(r) -= out[r];
            acc = c.A(j) * tmp + Eigen::Map<const Vec>(at(p, t), d);
            Eigen::Map<Vec>(at(S, t + 1), d) = c.projection(j + 1, 1) * acc;
        }
        // Unstable sum at the right end, then backward.
        {
            const int j = fib(b);
            double* u0 = at(U, b);
            std::fill_n(u0, d, 0.0);
            for (int m = 1; m <= N; ++m) add_matvec(kernel_.at(j, -m), at(p, b + m - 1), u0, d);
        }
        for (int t = b; t > a; --t) {
            const int j = fib(t);
            const Mat& r3 = c.step_inverse(j - 1, 3);
            double out[kMaxDim] = {0.0};
            add_matvec(kernel_.at(j, -N), at(p, t + N - 1), out, d);  // -R(N) p
            Eigen::Map<const Vec> ut(at(U, t), d);
            for (int r = 0; r < d; ++r) tmp(r) = ut(r) - out[r];
            acc = r3 * (tmp - Eigen::Map<const Vec>(at(p, t - 1), d));
            Eigen::Map<Vec>(at(U, t - 1), d) = c.projection(j - 1, 3) * acc;
        }
        for (int t = a; t <= b; ++t) {
            double* ht = at(h, t);
            const double* st = at(S, t);
            const double* ut = at(U, t);
            for (int r = 0; r < d; ++r) ht[r] = st[r] + ut[r];
        }
    }

    Evaluation ev;
    ev.h = Eigen::Map<const Vec>(at(h, 0), d);
    if (with_image) {
        const int img = chain[static_cast<std::size_t>(1 - lo)];
        ev.image_fiber = graph.fiber(img);
        ev.image = graph.point(img);
        ev.h_image = Eigen::Map<const Vec>(at(h, 1), d);
    }
    ev.nodes = graph.size();
    ev.saturated = graph.saturated();
    return ev;
}

ConjugacyField solve_h(const ConjugacyProblem& problem, Direction direction, double tol, SolveOptions options) {
    const SeriesParams params = choose_series_params(problem, direction, tol, options.initial_norm);
    return ConjugacyField(problem, direction, params, std::move(options));
}

namespace {

Vec series_term_value(const ConjugacyProblem& problem, Direction direction, OrbitGraph& graph, int node,
                      const FieldFn& h) {
    const int fib = graph.fiber(node);
    const Vec x = graph.point(node);
    const Vec dv = problem.drive(direction)(fib, x);
    Vec y = x;
    if (h) {
        y += h(fib, x);
    }
    return problem.other(direction)(fib, y) - dv;
}

}  // namespace

Vec p_term(const ConjugacyProblem& problem, Direction direction, int n, int fiber, const Vec& x, const FieldFn& h) {
    OrbitGraph graph(*problem.cocycle, problem.drive(direction));
    const int root = graph.intern(fiber, x);
    const int u = graph.walk(root, -(n + 1));
    return series_term_value(problem, direction, graph, u, h);
}

SeriesValue apply_T(const ConjugacyProblem& problem, Direction direction, const FieldFn& h, int fiber, const Vec& x,
                    int N) {
    const Cocycle& c = *problem.cocycle;
    const KernelTable kernel(c, fiber, fiber, N);
    OrbitGraph graph(c, problem.drive(direction));
    const int root = graph.intern(fiber, x);
    const int d = c.dim();
    SeriesValue out;
    out.value = Vec::Zero(d);
    int u = root;
    for (int n = 0; n <= N; ++n) {
        u = graph.prev(u);
        const Vec p = series_term_value(problem, direction, graph, u, h);
        add_matvec(kernel.at(fiber, n), p.data(), out.value.data(), d);
    }
    u = root;
    for (int m = 1; m <= N; ++m) {
        const Vec p = series_term_value(problem, direction, graph, u, h);
        add_matvec(kernel.at(fiber, -m), p.data(), out.value.data(), d);
        if (m < N) {
            u = graph.next(u);
        }
    }
    out.tail_bound = problem.C[fiber] * series_tail(problem.lambda, N);
    out.majorant_bound = 2.0 * majorant_factor(problem.lambda) * problem.C[fiber];
    return out;
}

Conjugacy build_H(const ConjugacyField& h) { return Conjugacy(h); }

std::vector<Vec> sample_box(int dim, int fiber, int count, double radius, std::uint64_t seed) {
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(fiber) + 0x9e37ULL)));
    std::uniform_real_distribution<double> box(-radius, radius);
    std::vector<Vec> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int s = 0; s < count; ++s) {
        Vec x(dim);
        for (int i = 0; i < dim; ++i) {
            x(i) = box(rng);
        }
        out.push_back(std::move(x));
    }
    return out;
}

namespace {

struct Job {
    int fiber;
    Vec x;
};

std::vector<Job> make_jobs(int dim, const SampleSpec& samples, std::uint64_t salt) {
    std::vector<Job> jobs;
    for (int fib : samples.fibers) {
        for (Vec& x : sample_box(dim, fib, samples.per_fiber, samples.radius, samples.seed ^ salt)) {
            jobs.push_back({fib, std::move(x)});
        }
    }
    return jobs;
}

}  // namespace

ResidualReport conjugacy_residual(const ConjugacyField& h, const SampleSpec& samples) {
    const ConjugacyProblem& pb = h.problem();
    const Cocycle& c = *pb.cocycle;
    const Perturbation& other = pb.other(h.direction());
    const FiberScalar bt = h.bound_T();
    const std::vector<Job> jobs = make_jobs(c.dim(), samples, 0);
    struct Out {
        double residual, bound, membership, t_ratio, abs_h;
        std::size_t nodes;
        int saturated;
    };
    std::vector<Out> res(jobs.size());
    parallel_for(jobs.size(), [&](std::size_t i) {
        const Job& job = jobs[i];
        const auto ev = h.evaluate(job.fiber, job.x, true);
        const Vec Hx = job.x + ev.h;
        const Vec lhs = ev.image + ev.h_image;
        const Vec rhs = c.A(job.fiber) * Hx + other(job.fiber, Hx);
        const double amp = spectral_norm(c.A(job.fiber)) + other.lipschitz(job.fiber);
        const double bound = h.error_bound(job.fiber + 1) + amp * h.error_bound(job.fiber) +
                             1e-13 * (1.0 + lhs.norm());
        res[i] = {(lhs - rhs).norm(),
                  bound,
                  (c.projection(job.fiber, 2) * ev.h).norm(),
                  ev.h.norm() / bt[job.fiber],
                  ev.h.norm(),
                  ev.nodes,
                  ev.saturated};
    });
    ResidualReport rep;
    rep.direction = to_string(h.direction());
    rep.samples = static_cast<int>(jobs.size());
    for (int fib : samples.fibers) {
        rep.fibers.push_back({fib, 0.0, 0.0, 0});
        rep.amplification = std::max(rep.amplification, spectral_norm(c.A(fib)) + other.lipschitz(fib));
    }
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        const Out& o = res[i];
        rep.max_residual = std::max(rep.max_residual, o.residual);
        rep.max_bound = std::max(rep.max_bound, o.bound);
        rep.max_ratio = std::max(rep.max_ratio, o.residual / o.bound);
        rep.max_membership = std::max(rep.max_membership, o.membership);
        rep.max_bound_T_ratio = std::max(rep.max_bound_T_ratio, o.t_ratio);
        rep.max_abs_h = std::max(rep.max_abs_h, o.abs_h);
        rep.max_nodes = std::max(rep.max_nodes, o.nodes);
        rep.saturated += o.saturated;
        for (auto& fr : rep.fibers) {
            if (fr.fiber == jobs[i].fiber) {
                fr.max_residual = std::max(fr.max_residual, o.residual);
                fr.bound = std::max(fr.bound, o.bound);
                ++fr.samples;
            }
        }
    }
    rep.pass = rep.max_ratio <= 1.0 && rep.max_bound_T_ratio <= 1.0 && rep.max_membership <= 1e-11;
    return rep;
}

double secant_lipschitz(const ConjugacyField& h, const SampleSpec& samples, int pilots) {
    const int d = h.problem().cocycle->dim();
    const std::vector<Job> jobs = make_jobs(d, {samples.fibers, pilots, samples.radius, samples.seed}, 0x11ULL);
    const double scales[3] = {1e-2, 1e-3, 1e-4};
    std::vector<double> out(jobs.size(), 0.0);
    parallel_for(jobs.size(), [&](std::size_t i) {
        std::mt19937_64 rng(splitmix64(samples.seed + 31 * i));
        std::normal_distribution<double> gauss(0.0, 1.0);
        const Vec hx = h(jobs[i].fiber, jobs[i].x);
        for (double s : scales) {
            Vec u(d);
            for (int j = 0; j < d; ++j) u(j) = gauss(rng);
            u.normalize();
            const Vec hy = h(jobs[i].fiber, Vec(jobs[i].x + s * u));
            out[i] = std::max(out[i], (hy - hx).norm() / s);
        }
    });
    return out.empty() ? 0.0 : *std::max_element(out.begin(), out.end());
}

RoundtripReport homeomorphism_check(const ConjugacyField& forward, const ConjugacyField& backward,
                                    const SampleSpec& samples) {
    RoundtripReport rep;
    rep.lipschitz_forward = secant_lipschitz(forward, samples, 4);
    rep.lipschitz_backward = secant_lipschitz(backward, samples, 4);
    const int d = forward.problem().cocycle->dim();
    const std::vector<Job> jobs = make_jobs(d, samples, 0x22ULL);
    struct Out {
        double bf, fb, bound_bf, bound_fb;
    };
    std::vector<Out> res(jobs.size());
    parallel_for(jobs.size(), [&](std::size_t i) {
        const int fib = jobs[i].fiber;
        const Vec& x = jobs[i].x;
        const Vec hx = x + forward(fib, x);
        const Vec back = hx + backward(fib, hx);
        const Vec bx = x + backward(fib, x);
        const Vec fwd = bx + forward(fib, bx);
        const double e = forward.error_bound(fib);
        const double ebar = backward.error_bound(fib);
        const double slack = 1e-13 * (1.0 + x.norm());
        res[i] = {(back - x).norm(), (fwd - x).norm(), ebar + (1.0 + rep.lipschitz_backward) * e + slack,
                  e + (1.0 + rep.lipschitz_forward) * ebar + slack};
    });
    rep.samples = static_cast<int>(jobs.size());
    rep.pass = true;
    for (const Out& o : res) {
        rep.max_backward_after_forward = std::max(rep.max_backward_after_forward, o.bf);
        rep.max_forward_after_backward = std::max(rep.max_forward_after_backward, o.fb);
        rep.bound_backward_after_forward = std::max(rep.bound_backward_after_forward, o.bound_bf);
        rep.bound_forward_after_backward = std::max(rep.bound_forward_after_backward, o.bound_fb);
        rep.pass = rep.pass && o.bf <= o.bound_bf && o.fb <= o.bound_fb;
    }
    return rep;
}

ContractionReport measure_contraction(const ConjugacyProblem& problem, Direction direction, int N,
                                      const SampleSpec& samples, int pairs) {
    const Cocycle& c = *problem.cocycle;
    const int d = c.dim();
    ContractionReport rep;
    rep.pairs = pairs;
    rep.points_per_pair = samples.per_fiber * static_cast<int>(samples.fibers.size());
    rep.q = contraction_factor(problem.c, problem.lambda);
    std::mt19937_64 rng(splitmix64(samples.seed ^ 0xc0ffeeULL));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.2, 1.0);
    std::uniform_real_distribution<double> phase(0.0, 6.283185307179586);
    std::vector<double> ratios(static_cast<std::size_t>(pairs), 0.0);
    for (int p = 0; p < pairs; ++p) {
        // Both fields share a direction e(w) in E^{s,u}(w); with independent
        // frequencies the weighted distance is exactly |a1| + |a2|.
        Vec v(d), w1(d), w2(d);
        for (int i = 0; i < d; ++i) {
            v(i) = gauss(rng);
            w1(i) = gauss(rng);
            w2(i) = gauss(rng);
        }
        const double a1 = unit(rng), a2 = -unit(rng), ph1 = phase(rng), ph2 = phase(rng);
        auto dir = [&c, v](int fib) {
            Vec e = c.su_projection(fib) * v;
            return Vec(e / e.norm());
        };
        const FiberScalar& C = problem.C;
        FieldFn h1 = [=](int fib, const Vec& x) { return Vec(C[fib] * a1 * std::sin(w1.dot(x) + ph1) * dir(fib)); };
        FieldFn h2 = [=](int fib, const Vec& x) { return Vec(C[fib] * a2 * std::sin(w2.dot(x) + ph2) * dir(fib)); };
        const double distance = std::abs(a1) + std::abs(a2);
        const std::vector<Job> jobs = make_jobs(d, samples, 0x33ULL + static_cast<std::uint64_t>(p));
        std::vector<double> num(jobs.size(), 0.0);
        parallel_for(jobs.size(), [&](std::size_t i) {
            const Vec t1 = apply_T(problem, direction, h1, jobs[i].fiber, jobs[i].x, N).value;
            const Vec t2 = apply_T(problem, direction, h2, jobs[i].fiber, jobs[i].x, N).value;
            num[i] = (t1 - t2).norm() / C[jobs[i].fiber];
        });
        const double top = num.empty() ? 0.0 : *std::max_element(num.begin(), num.end());
        ratios[static_cast<std::size_t>(p)] = top / distance;
    }
    rep.max_ratio = ratios.empty() ? 0.0 : *std::max_element(ratios.begin(), ratios.end());
    rep.pass = rep.max_ratio <= rep.q;
    return rep;
}

}  // namespace rdslin
