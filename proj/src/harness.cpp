#include "rdslin/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rdslin/errors.hpp"
#include "rdslin/version.hpp"

namespace rdslin {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Report scalar_summary(const FiberScalar& s) {
    if (s.empty()) {
        return {{"name", s.name}, {"fibers", 0}};
    }
    return {{"name", s.name}, {"first", s.first}, {"last", s.last()}, {"min", s.min()}, {"max", s.max()}};
}

Report diagnostic_json(const TemperedDiagnostic& d) {
    return {{"max_outer_slope", d.max_outer_slope}, {"threshold", d.threshold}, {"pass", d.pass}};
}

Report params_json(const SeriesParams& p) {
    return {{"trunc_N", p.trunc_N},
            {"picard_k", p.picard_k},
            {"contraction_q", p.contraction_q},
            {"effective_q", p.effective_q},
            {"majorant", p.majorant},
            {"c_cap", p.c_cap},
            {"C_max", p.C_max},
            {"tail_bound", p.tail_bound},
            {"picard_bound", p.picard_bound},
            {"certified_error", p.certified_error},
            {"tol", p.tol},
            {"required_reach", ConjugacyField::required_reach(p)}};
}

Report residual_json(const ResidualReport& r, int window) {
    Report fibers = Report::array();
    for (const auto& f : r.fibers) {
        fibers.push_back({{"fiber", f.fiber}, {"max_residual", f.max_residual}, {"bound", f.bound}, {"samples", f.samples}});
    }
    return {{"direction", r.direction},
            {"max_residual", r.max_residual},
            {"max_bound", r.max_bound},
            {"max_ratio", r.max_ratio},
            {"amplification", r.amplification},
            {"max_membership", r.max_membership},
            {"max_bound_T_ratio", r.max_bound_T_ratio},
            {"max_abs_h", r.max_abs_h},
            {"max_nodes", r.max_nodes},
            {"saturated_nodes", r.saturated},
            {"samples", r.samples},
            {"window_half_width", window},
            {"fibers", fibers},
            {"pass", r.pass}};
}

Report inequality_json(const InequalityReport& r, int window) {
    Report out = Report::array();
    for (const auto& c : r.checks) {
        out.push_back({{"name", c.name},
                       {"samples", c.samples},
                       {"max_ratio", c.max_ratio},
                       {"window_half_width", window},
                       {"pass", c.pass}});
    }
    return out;
}

Report holder_json(const HolderReport& h, int window) {
    return {{"fiber", h.fiber},
            {"alpha", h.alpha},
            {"slope", h.slope},
            {"intercept", h.intercept},
            {"T", h.T},
            {"radius", h.radius},
            {"max_bound_ratio", h.max_bound_ratio},
            {"min_distance", h.min_distance},
            {"max_distance", h.max_distance},
            {"dyadic_span", h.dyadic_span},
            {"samples", h.pairs.size()},
            {"window_half_width", window},
            {"pass", h.pass}};
}

FiberScalar pointwise_max(const FiberScalar& a, const FiberScalar& b, std::string name) {
    const int lo = std::max(a.first, b.first);
    const int hi = std::min(a.last(), b.last());
    return FiberScalar::generate(std::move(name), lo, hi, [&](int k) { return std::max(a[k], b[k]); });
}

std::string mode_name(AmplitudeMode m) {
    switch (m) {
        case AmplitudeMode::value: return "value";
        case AmplitudeMode::budget: return "budget";
        case AmplitudeMode::tower: return "tower";
    }
    return "value";
}

}  // namespace

Experiment::Experiment(ExperimentConfig config) : config_(std::move(config)) {
    report_["rdslin_version"] = kVersion;
    report_["scenario"] = config_.scenario;
    report_["config"] = Report::parse(config_.resolved.dump());
    timings_ = Report::object();
}

Experiment::~Experiment() = default;

const Cocycle& Experiment::cocycle() const {
    if (!cocycle_) throw ConfigError("experiment not prepared");
    return *cocycle_;
}
const DichotomyConstants& Experiment::constants() const {
    if (!constants_) throw ConfigError("experiment not prepared");
    return *constants_;
}
const Perturbation& Experiment::f() const {
    if (!f_) throw ConfigError("experiment not prepared");
    return *f_;
}
const Perturbation& Experiment::g() const {
    if (!g_) throw ConfigError("experiment not prepared");
    return *g_;
}
const ConjugacyProblem& Experiment::problem() const {
    if (!problem_) throw ConfigError("experiment not prepared");
    return *problem_;
}
const ConjugacyField& Experiment::forward() const {
    if (!fwd_) throw ConfigError("experiment not solved");
    return *fwd_;
}
const ConjugacyField& Experiment::backward() const {
    if (!bwd_) throw ConfigError("experiment not solved");
    return *bwd_;
}

void Experiment::timed(const std::string& stage, const std::function<void()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body();
    } catch (...) {
        timings_[stage] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        throw;
    }
    timings_[stage] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void Experiment::check_pass(const std::string& name, bool ok) {
    if (!ok) {
        failed_checks_.push_back(name);
    }
}

void Experiment::choose_c() {
    const Cocycle& cc = *cocycle_;
    const DichotomyConstants& k = *constants_;
    const double cap = max_admissible_c(k.lambda);
    auto needed = [&](const PerturbationSpec& s) {
        if (s.family == Family::zero || s.mode != AmplitudeMode::value) {
            return 0.0;
        }
        double need = 0.0;
        for (int j = cc.first(); j < cc.last(); ++j) {
            need = std::max(need, s.amplitude * base_lipschitz(s.family) * spectral_norm(cc.su_projection(j + 1)) *
                                      k.K[j + 1]);
        }
        return need;
    };
    const double need = config_.alpha ? 0.0 : std::max(needed(config_.f), needed(config_.g));
    const bool any_budget = config_.f.mode != AmplitudeMode::value || config_.g.mode != AmplitudeMode::value;
    if (config_.c) {
        c_ = *config_.c;
        c_source_ = "config";
    } else if (any_budget || need == 0.0) {
        c_ = std::max(0.3 * cap, need);
        c_source_ = "auto";
    } else {
        c_ = need;
        c_source_ = "auto";
    }
    report_["smallness"] = {{"c", c_},
                            {"c_source", c_source_},
                            {"c_cap", cap},
                            {"c_needed_by_fixed_amplitudes", need},
                            {"q", contraction_factor(c_, k.lambda)}};
}

void Experiment::build_perturbations() {
    const Cocycle& cc = *cocycle_;
    const DichotomyConstants& k = *constants_;
    FiberScalar install = FiberScalar::generate("c/K(sigma)", cc.first(), cc.last() - 1,
                                                [&](int j) { return c_ / k.K[j + 1]; });
    budget_.reset();
    Report warnings = report_.value("warnings", Report::array());
    if (config_.alpha) {
        const FiberScalar cz = growth_budget(k, c_);
        FiberScalar D_upper = FiberScalar::constant("D_upper", cz.first, cz.last(), 0.0);
        const Family suite_family = config_.f.family != Family::zero   ? config_.f.family
                                    : config_.g.family != Family::zero ? config_.g.family
                                                                       : Family::tanh;
        for (Family fam : {config_.f.family, config_.g.family, suite_family}) {
            D_upper = pointwise_max(D_upper, family_bound(fam, cz, cc), "D_upper");
        }
        budget_ = compute_budget(k, D_upper, *config_.alpha, c_);
        install = budget_->d;
        const HolderBudget& b = *budget_;
        report_["holder_budget"] = {{"alpha", b.alpha},
                                    {"alpha0", b.alpha0},
                                    {"epsilon", b.epsilon},
                                    {"c", b.c_base},
                                    {"c_max", b.c_max},
                                    {"R", b.R},
                                    {"B", b.B.value},
                                    {"B_tail", b.B.tail},
                                    {"B_terms", b.B.terms},
                                    {"B_ratio", b.B.ratio},
                                    {"N", scalar_summary(b.N.value)},
                                    {"N_edge_fibers", b.N.edge_fibers.size()},
                                    {"N_regularity_excess", b.N.regularity_excess},
                                    {"d", scalar_summary(b.d)},
                                    {"d_capped_by_Z", b.capped_by_Z},
                                    {"d_capped_by_one", b.capped_by_one},
                                    {"window_half_width", half_width_}};
        if (!b.N.edge_fibers.empty()) {
            warnings.push_back("envelope N attains its supremum at the window edge on " +
                               std::to_string(b.N.edge_fibers.size()) + " fibers");
        }
    }
    tower_.reset();
    auto make = [&](const PerturbationSpec& s, const char* which) -> Perturbation {
        if (s.family == Family::zero) {
            return make_zero(cc);
        }
        switch (s.mode) {
            case AmplitudeMode::value:
                return make_standard(s.family, FiberScalar::constant("eps", cc.first(), cc.last() - 1, s.amplitude),
                                     cc, install);
            case AmplitudeMode::tower:
                if (!config_.alpha) {
                    const double rho = k.has_growth ? k.rho : k.lambda;
                    const Envelope reg = envelope_regular(k.K, rho);
                    tower_ = make_tower(reg.value, k.K, c_, rho, s.family, cc);
                    return tower_->f;
                }
                warnings.push_back(std::string("perturbation ") + which +
                                   ": tower amplitude replaced by the Hoelder budget d");
                [[fallthrough]];
            case AmplitudeMode::budget:
                return make_standard(s.family, amplitude_for_budget(s.family, install, cc), cc, install);
        }
        return make_zero(cc);
    };
    f_ = std::make_unique<Perturbation>(make(config_.f, "f"));
    g_ = std::make_unique<Perturbation>(config_.identical ? *f_ : make(config_.g, "g"));
    report_["warnings"] = warnings;
}

void Experiment::check_perturbations() {
    const Cocycle& cc = *cocycle_;
    Report out = Report::object();
    for (const auto& [name, spec, p] : {std::tuple{"f", &config_.f, f_.get()}, std::tuple{"g", &config_.g, g_.get()}}) {
        const PerturbationReport v = rdslin::validate(*p, cc, 100, config_.seed);
        double kappa = 0.0;
        int worst = cc.first();
        for (int j = cc.first(); j < cc.last(); ++j) {
            const double kj = spectral_norm(cc.su_inverse(j)) * p->lipschitz(j);
            if (kj > kappa) {
                kappa = kj;
                worst = j;
            }
        }
        Report entry = {{"family", to_string(p->family())},
                        {"mode", mode_name(spec->mode)},
                        {"max_lipschitz", p->lipschitz_scalar().max()},
                        {"max_bound", p->bound_D().max()},
                        {"samples_per_fiber", v.samples_per_fiber},
                        {"fibers", v.fibers},
                        {"max_quotient_ratio", v.max_quotient_ratio},
                        {"max_norm_ratio", v.max_norm_ratio},
                        {"max_center_leak", v.max_center_leak},
                        {"max_inverse_contraction", kappa},
                        {"window_half_width", half_width_},
                        {"pass", v.pass && kappa < 1.0}};
        if (std::string(name) == "f" && tower_) {
            entry["tower"] = {{"threshold", tower_->threshold},
                              {"unresolved", tower_->unresolved},
                              {"max_budget_ratio", tower_->max_budget_ratio}};
        }
        out[name] = entry;
        report_["perturbations"] = out;
        if (!v.pass) {
            const char* h = v.max_center_leak > 1e-12 ? hyp::range
                            : v.max_norm_ratio > 1.0 + 1e-12 ? hyp::boundedness
                                                             : hyp::lipschitz;
            throw HypothesisViolation(h, std::string("perturbation ") + name + " failed sampled validation");
        }
        if (!(kappa < 1.0)) {
            throw HypothesisViolation(hyp::map_invertibility,
                                      std::string("perturbation ") + name + ": ||A^{-1}|| Lip = " +
                                          std::to_string(kappa) + " >= 1 at fiber " + std::to_string(worst));
        }
    }
}

void Experiment::build(int half_width) {
    half_width_ = half_width;
    fwd_.reset();
    bwd_.reset();
    problem_.reset();
    cocycle_ = std::make_unique<Cocycle>(build_cocycle(config_, half_width));
    const Cocycle& cc = *cocycle_;
    report_["window"] = {{"base", to_string(cc.window().base().kind)},
                         {"half_width", half_width},
                         {"fibers", cc.window().size()},
                         {"requested_half_width", config_.half_width}};
    if (cc.window().base().kind == BaseKind::rotation) {
        report_["window"]["surrogate_angle"] = cc.window().surrogate_angle();
        report_["window"]["angle_numerator"] = cc.window().angle_numerator();
    }

    const HypothesisReport hr = validate_hypotheses(cc);
    Report checks = Report::array();
    for (const auto& c : hr.checks) {
        checks.push_back({{"name", c.name},
                          {"hypothesis", c.hypothesis},
                          {"max_violation", c.max_violation},
                          {"tolerance", c.tolerance},
                          {"worst_fiber", c.worst_fiber},
                          {"fibers", cc.window().size()},
                          {"pass", c.pass}});
    }
    report_["hypotheses"] = checks;
    if (const HypothesisCheck* ff = hr.first_failure()) {
        throw HypothesisViolation(ff->hypothesis, ff->name + " check failed: max violation " +
                                                      fmt(ff->max_violation) + " at fiber " +
                                                      std::to_string(ff->worst_fiber));
    }

    constants_ = std::make_unique<DichotomyConstants>(estimate_constants(cc));
    const DichotomyConstants& k = *constants_;
    report_["constants"] = {{"lambda", k.lambda},
                            {"rho", k.has_growth ? Report(k.rho) : Report()},
                            {"alpha0", k.alpha0()},
                            {"has_growth", k.has_growth},
                            {"K", scalar_summary(k.K)},
                            {"Z", scalar_summary(k.Z)},
                            {"M", scalar_summary(k.M)},
                            {"K_tempered", diagnostic_json(k.K_diagnostic)},
                            {"Z_tempered", diagnostic_json(k.Z_diagnostic)},
                            {"grid_points", k.grid_points},
                            {"window_half_width", half_width}};

    choose_c();
    build_perturbations();
    check_perturbations();

    D_ = pointwise_max(f_->bound_D(), g_->bound_D(), "D");
    C_ = envelope_C(k.K, D_, k.lambda);
    report_["envelopes"] = {{"D", scalar_summary(D_)},
                            {"C", scalar_summary(C_->value)},
                            {"C_edge_fibers", C_->edge_fibers.size()},
                            {"C_regularity_excess", C_->regularity_excess},
                            {"window_half_width", half_width}};
    if (!C_->edge_fibers.empty()) {
        report_["warnings"].push_back("envelope C attains its supremum at the window edge on " +
                                      std::to_string(C_->edge_fibers.size()) + " fibers");
    }

    problem_ = std::make_unique<ConjugacyProblem>(ConjugacyProblem{cocycle_.get(), f_.get(), g_.get(), k.lambda,
                                                                   C_->value, c_});
    params_fwd_ = choose_series_params(*problem_, Direction::forward, config_.tol);
    params_bwd_ = choose_series_params(*problem_, Direction::backward, config_.tol);
    report_["series"] = {{"forward", params_json(*params_fwd_)}, {"backward", params_json(*params_bwd_)}};
}

void Experiment::prepare() {
    int probe = 0;
    for (int p : config_.probe_fibers) {
        probe = std::max(probe, std::abs(p));
    }
    int w = config_.half_width;
    for (int round = 0; round < 6; ++round) {
        build(w);
        int reach = std::max(ConjugacyField::required_reach(*params_fwd_),
                             ConjugacyField::required_reach(*params_bwd_)) + 1;
        if (config_.alpha && config_.suite_samples > 0) {
            const SuiteOptions so;
            reach = std::max(reach, so.trunc + 2 * so.max_n + 2);
        }
        const int need = probe + reach + 4;
        if (need <= w) {
            report_["window"]["enlargements"] = round;
            return;
        }
        w = need;
    }
    throw ConvergenceFailure("window enlargement did not stabilize");
}

void Experiment::solve_and_check() {
    const int W = half_width_;
    SolveOptions opts;
    opts.strict_literal_mode = config_.strict_literal_mode;
    fwd_ = std::make_unique<ConjugacyField>(*problem_, Direction::forward, *params_fwd_, opts);
    bwd_ = std::make_unique<ConjugacyField>(*problem_, Direction::backward, *params_bwd_, opts);
    report_["strict_literal_mode"] = config_.strict_literal_mode;
    const SampleSpec spec{config_.probe_fibers, config_.samples, config_.sample_radius, config_.seed};

    Report checks = Report::object();
    ResidualReport rf, rb;
    timed("residual", [&] {
        rf = conjugacy_residual(*fwd_, spec);
        rb = conjugacy_residual(*bwd_, spec);
    });
    checks["residual_forward"] = residual_json(rf, W);
    checks["residual_backward"] = residual_json(rb, W);
    check_pass("residual_forward", rf.pass);
    check_pass("residual_backward", rb.pass);
    if (rf.saturated + rb.saturated > 0) {
        report_["warnings"].push_back("orbit points were clamped at the saturation level");
    }

    if (config_.identical) {
        const bool ok = rf.max_abs_h == 0.0 && rb.max_abs_h == 0.0 && rf.max_residual <= 1e-12 &&
                        rb.max_residual <= 1e-12;
        checks["identity"] = {{"max_abs_h", std::max(rf.max_abs_h, rb.max_abs_h)},
                              {"max_residual", std::max(rf.max_residual, rb.max_residual)},
                              {"threshold", 1e-12},
                              {"samples", rf.samples + rb.samples},
                              {"window_half_width", W},
                              {"pass", ok}};
        check_pass("identity", ok);
    }

    if (config_.roundtrip_samples > 0) {
        RoundtripReport rt;
        timed("roundtrip", [&] {
            rt = homeomorphism_check(*fwd_, *bwd_,
                                     {config_.probe_fibers, config_.roundtrip_samples, config_.sample_radius,
                                      config_.seed});
        });
        checks["roundtrip"] = {{"max_backward_after_forward", rt.max_backward_after_forward},
                               {"bound_backward_after_forward", rt.bound_backward_after_forward},
                               {"max_forward_after_backward", rt.max_forward_after_backward},
                               {"bound_forward_after_backward", rt.bound_forward_after_backward},
                               {"lipschitz_forward_estimate", rt.lipschitz_forward},
                               {"lipschitz_backward_estimate", rt.lipschitz_backward},
                               {"samples", rt.samples},
                               {"window_half_width", W},
                               {"pass", rt.pass}};
        check_pass("roundtrip", rt.pass);
    }

    if (config_.contraction_pairs > 0) {
        // Probe the direction whose series term depends on the field.
        const Direction dir = f_->is_zero() ? Direction::forward : Direction::backward;
        const int N = dir == Direction::forward ? params_fwd_->trunc_N : params_bwd_->trunc_N;
        ContractionReport cr;
        timed("contraction", [&] {
            cr = measure_contraction(*problem_, dir, N,
                                     {config_.probe_fibers, config_.contraction_points, config_.sample_radius,
                                      config_.seed},
                                     config_.contraction_pairs);
        });
        checks["contraction"] = {{"direction", to_string(dir)},
                                 {"pairs", cr.pairs},
                                 {"points_per_pair", cr.points_per_pair},
                                 {"max_ratio", cr.max_ratio},
                                 {"q", cr.q},
                                 {"window_half_width", W},
                                 {"pass", cr.pass}};
        check_pass("contraction", cr.pass);
    }
    report_["checks"] = checks;

    if (budget_) {
        Report holder = Report::object();
        const HolderBudget& b = *budget_;
        const int w = config_.probe_fibers.front();
        const int d = cocycle_->dim();
        if (config_.holder_pairs > 0) {
            timed("holder", [&] {
                const ConjugacyField& hf = *fwd_;
                const ConjugacyField& hb = *bwd_;
                HolderReport fw = empirical_holder([&](const Vec& x) { return Vec(x + hf(w, x)); }, d,
                                                   config_.sample_radius, config_.holder_pairs, b.alpha, config_.seed);
                HolderReport bw = empirical_holder([&](const Vec& x) { return Vec(x + hb(w, x)); }, d,
                                                   config_.sample_radius, config_.holder_pairs, b.alpha,
                                                   config_.seed + 1);
                fw.fiber = bw.fiber = w;
                holder["forward"] = holder_json(fw, W);
                holder["inverse"] = holder_json(bw, W);
                check_pass("holder_forward", fw.pass);
                check_pass("holder_inverse", bw.pass);
                holder_pairs_ = fw.pairs;
            });
        }
        if (config_.suite_samples > 0) {
            timed("inequalities", [&] {
                SuiteOptions so;
                so.fibers = config_.probe_fibers;
                so.samples = config_.suite_samples;
                so.radius = config_.sample_radius;
                so.seed = config_.seed;
                const Family fam = config_.f.family != Family::zero   ? config_.f.family
                                   : config_.g.family != Family::zero ? config_.g.family
                                                                      : Family::tanh;
                const FiberScalar cz = growth_budget(*constants_, c_);
                const Perturbation fs = make_standard(fam, amplitude_for_budget(fam, cz, *cocycle_), *cocycle_, cz);
                const InequalityReport traj = verify_trajectory_estimates(*cocycle_, *constants_, b, fs, so);
                const FieldFn h = holder_test_field(*cocycle_, b.alpha, config_.seed);
                const InequalityReport terms = verify_term_estimates(*problem_, b, h, so);
                const InequalityCheck stab = holder_stability(*problem_, b, h, params_fwd_->trunc_N, so);
                holder["trajectory_estimates"] = inequality_json(traj, W);
                holder["term_estimates"] = inequality_json(terms, W);
                holder["stability"] = inequality_json(InequalityReport{{stab}}, W);
                check_pass("trajectory_estimates", traj.pass());
                check_pass("term_estimates", terms.pass());
                check_pass("holder_stability", stab.pass);
            });
        }
        report_["holder"] = holder;
    }
}

RunOutcome Experiment::finish(int code) {
    Report failed = Report::array();
    for (const auto& f : failed_checks_) {
        failed.push_back(f);
    }
    if (code == exit_code::pass && !failed_checks_.empty()) {
        code = exit_code::convergence;
    }
    report_["failed_checks"] = failed;
    report_["status"] = code == exit_code::pass          ? "pass"
                        : code == exit_code::hypothesis  ? "hypothesis-violation"
                        : code == exit_code::convergence ? (failed_checks_.empty() ? "convergence-failure"
                                                                                   : "checks-failed")
                                                         : "config-error";
    report_["exit_code"] = code;
    report_["timings"] = timings_;
    return {report_, code};
}

namespace {

template <class Body>
int guarded(Report& report, Body&& body) {
    try {
        body();
        return exit_code::pass;
    } catch (const HypothesisViolation& e) {
        report["failure"] = {{"kind", "hypothesis-violation"}, {"hypothesis", e.hypothesis()}, {"message", e.what()}};
        return exit_code::hypothesis;
    } catch (const ConvergenceFailure& e) {
        report["failure"] = {{"kind", "convergence-failure"}, {"message", e.what()}};
        return exit_code::convergence;
    } catch (const TruncationError& e) {
        report["failure"] = {{"kind", "truncation"}, {"message", e.what()}};
        return exit_code::config;
    } catch (const ConfigError& e) {
        report["failure"] = {{"kind", "config-error"}, {"message", e.what()}};
        return exit_code::config;
    }
}

}  // namespace

RunOutcome Experiment::run() {
    failed_checks_.clear();
    const int code = guarded(report_, [&] {
        timed("prepare", [&] { prepare(); });
        timed("solve", [&] { solve_and_check(); });
    });
    return finish(code);
}

RunOutcome Experiment::validate() {
    failed_checks_.clear();
    const int code = guarded(report_, [&] { timed("prepare", [&] { prepare(); }); });
    return finish(code);
}

std::string Experiment::constants_csv() const {
    std::ostringstream out;
    out << "offset,K,Z,M,C,N,d,D\n";
    if (!cocycle_ || !constants_) {
        return out.str();
    }
    auto cell = [&](const FiberScalar* s, int k) { return s && s->contains(k) ? fmt((*s)[k]) : std::string(); };
    const FiberScalar* C = C_ ? &C_->value : nullptr;
    const FiberScalar* N = budget_ ? &budget_->N.value : nullptr;
    const FiberScalar* d = budget_ ? &budget_->d : nullptr;
    const FiberScalar* D = D_.empty() ? nullptr : &D_;
    for (int k = cocycle_->first(); k <= cocycle_->last(); ++k) {
        out << k << ',' << cell(&constants_->K, k) << ',' << cell(constants_->has_growth ? &constants_->Z : nullptr, k)
            << ',' << cell(&constants_->M, k) << ',' << cell(C, k) << ',' << cell(N, k) << ',' << cell(d, k) << ','
            << cell(D, k) << '\n';
    }
    return out.str();
}

std::string Experiment::holder_pairs_csv() const {
    std::ostringstream out;
    out << "distance,image_distance\n";
    for (const auto& p : holder_pairs_) {
        out << fmt(p.distance) << ',' << fmt(p.image_distance) << '\n';
    }
    return out.str();
}

void write_outputs(const Experiment& experiment, const RunOutcome& outcome, const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        throw ConfigError("cannot create output directory '" + out_dir + "': " + ec.message());
    }
    auto write = [&](const std::string& name, const std::string& text) {
        std::ofstream f(fs::path(out_dir) / name);
        if (!f) {
            throw ConfigError("cannot write '" + (fs::path(out_dir) / name).string() + "'");
        }
        f << text;
    };
    write("report.json", outcome.report.dump(2) + "\n");
    write("constants.csv", experiment.constants_csv());
    write("holder_pairs.csv", experiment.holder_pairs_csv());
}

std::string report_payload(const Report& report) {
    Report copy = report;
    copy.erase("timings");
    return copy.dump();
}

RunOutcome run_experiment(const ExperimentConfig& config, const std::string& out_dir) {
    Experiment e(config);
    RunOutcome out = e.run();
    const std::string dir = out_dir.empty() ? config.out : out_dir;
    if (!dir.empty()) {
        write_outputs(e, out, dir);
    }
    return out;
}

RunOutcome validate_experiment(const ExperimentConfig& config) {
    Experiment e(config);
    return e.validate();
}

RunOutcome run_components(const nlohmann::json& doc, const std::string& out_dir) {
    if (!doc.is_object() || !doc.contains("components") || !doc.at("components").is_array()) {
        throw ConfigError("components config must hold a \"components\" array");
    }
    RunOutcome out;
    out.report["rdslin_version"] = kVersion;
    Report summary = Report::array();
    Report timings = Report::object();
    int index = 0;
    for (const auto& comp : doc.at("components")) {
        Report row = {{"index", index}, {"name", comp.value("name", "component_" + std::to_string(index))}};
        RunOutcome r;
        try {
            const ExperimentConfig cfg = parse_config(comp);
            Experiment e(cfg);
            r = e.run();
            if (!out_dir.empty()) {
                write_outputs(e, r, (std::filesystem::path(out_dir) / ("component_" + std::to_string(index))).string());
            }
        } catch (const ConfigError& e) {
            r.exit_code = exit_code::config;
            r.report["status"] = "config-error";
            r.report["failure"] = {{"kind", "config-error"}, {"message", e.what()}};
        }
        const Report& rep = r.report;
        auto pick = [&](const char* section, const char* key) {
            return rep.contains(section) && rep.at(section).contains(key) ? rep.at(section).at(key) : Report();
        };
        row["scenario"] = rep.value("scenario", Report());
        row["status"] = rep.value("status", Report());
        row["exit_code"] = r.exit_code;
        row["lambda"] = pick("constants", "lambda");
        row["rho"] = pick("constants", "rho");
        row["alpha0"] = pick("constants", "alpha0");
        row["c"] = pick("smallness", "c");
        row["c_cap"] = pick("smallness", "c_cap");
        row["alpha"] = pick("holder_budget", "alpha");
        row["alpha_c_max"] = pick("holder_budget", "c_max");
        if (rep.contains("failure")) {
            row["failure"] = rep.at("failure");
        }
        summary.push_back(row);
        timings["component_" + std::to_string(index)] = rep.value("timings", Report::object());
        out.exit_code = std::max(out.exit_code, r.exit_code);
        ++index;
    }
    out.report["components"] = summary;
    out.report["exit_code"] = out.exit_code;
    out.report["timings"] = timings;
    return out;
}

}  // namespace rdslin
