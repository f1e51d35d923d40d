#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "rdslin/errors.hpp"
#include "rdslin/harness.hpp"
#include "rdslin/holder.hpp"
#include "support.hpp"

using namespace rdslin;
using nlohmann::json;

namespace {

Vec vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

json small_run(json doc) {
    doc["samples"] = 20;
    doc["roundtrip_samples"] = 10;
    return doc;
}

}  // namespace

TEST_SUITE("holder") {
    TEST_CASE("adapted norm on the autonomous cocycle") {
        const Cocycle c = test::autonomous_cocycle(40);
        CHECK(adapted_norm(c, vec2(0.0, 0.0), 0, 24, 1.0) == 0.0);
        CHECK(adapted_norm(c, vec2(1.0, 0.0), 0, 24, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(adapted_norm(c, vec2(0.0, 1.0), 0, 24, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
        // Sandwich |x| <= |x|_w <= Z |x| with Z = 1.
        for (const Vec& x : sample_box(2, 0, 50, 3.0, 1)) {
            const double a = adapted_norm(c, x, 0, 24, 1.0);
            CHECK(a >= x.norm() * (1.0 - 1e-15));
            CHECK(a <= x.norm() * (1.0 + 1e-15));
        }
    }

    TEST_CASE("holder ratio and the divergence threshold") {
        const double e = std::exp(1.0);
        CHECK(holder_ratio(1.0, 0.05) == doctest::Approx((e + 0.05) / (1.0 - 0.05 * e)).epsilon(1e-15));
        CHECK_THROWS_AS((void)holder_ratio(1.0, 0.4), HypothesisViolation);
        const double cm = holder_c_max(1.0, 1.0, 0.5, 0.025);
        const double R = holder_ratio(1.0, cm);
        CHECK(std::pow(R, 0.5) * std::exp(5 * 0.025 - 1.0) == doctest::Approx(1.0).epsilon(1e-10));
        const SeriesB b = series_B(1.0, 1.0, 0.5, 0.025, 0.05);
        CHECK(b.ratio < 1.0);
        CHECK(b.tail >= 0.0);
        CHECK(b.value > 0.0);
        CHECK_THROWS_AS((void)series_B(1.0, 1.0, 0.5, 0.025, 0.9 * cm + 0.1 * (1.0 / e)), HypothesisViolation);
    }

    TEST_CASE("budget d behaves as the closed form") {
        const Cocycle c = test::autonomous_cocycle(48);
        const DichotomyConstants k = estimate_constants(c);
        const FiberScalar D = FiberScalar::constant("D", c.first(), c.last() - 1, 0.05 * std::sqrt(2.0));
        const HolderBudget b = compute_budget(k, D, 0.5, 0.05);
        CHECK(b.epsilon == doctest::Approx(0.025).epsilon(1e-9));
        const double N = b.N.value[0];
        const double closed = std::pow(0.05 / (12.0 * b.B.value * N * N * N), 2.0);
        CHECK(b.d_formula[0] == doctest::Approx(closed).epsilon(1e-12));
        CHECK(b.d[0] <= b.d_formula[0]);

        // Larger N (through a larger D) strictly decreases d.
        FiberScalar D2 = D;
        for (double& v : D2.values) v *= 4.0;
        const HolderBudget b2 = compute_budget(k, D2, 0.5, 0.05);
        CHECK(b2.N.value[0] > N);
        CHECK(b2.d[0] < b.d[0]);

        // Smaller alpha pushes d towards 0.
        const HolderBudget small = compute_budget(k, D, 0.05, 0.05);
        CHECK(small.d[0] < b.d[0]);

        CHECK_THROWS_AS((void)compute_budget(k, D, 1.0, 0.05), HypothesisViolation);
    }

    TEST_CASE("term estimates are trivial for zero perturbations") {
        const Cocycle c = test::autonomous_cocycle(64);
        const DichotomyConstants k = estimate_constants(c);
        const FiberScalar D = FiberScalar::constant("D", c.first(), c.last() - 1, 0.05 * std::sqrt(2.0));
        const HolderBudget b = compute_budget(k, D, 0.5, 0.05);
        const Perturbation zero = make_zero(c);
        ConjugacyProblem p;
        p.cocycle = &c;
        p.f = &zero;
        p.g = &zero;
        p.lambda = k.lambda;
        p.c = 0.05;
        p.C = envelope_C(k.K, D, k.lambda).value;
        SuiteOptions opts;
        opts.samples = 100;
        const InequalityReport r = verify_term_estimates(p, b, holder_test_field(c, 0.5, 3), opts);
        CHECK(r.pass());
        // The left sides of the f, g and p bounds vanish; the trajectory bound does not involve f or g.
        for (const char* name : {"f hoelder", "g hoelder", "term p"}) {
            const InequalityCheck* chk = r.find(name);
            REQUIRE(chk != nullptr);
            CHECK(chk->max_ratio == 0.0);
        }
    }

    TEST_CASE("identity map fits slope one") {
        const HolderReport r = empirical_holder([](const Vec& x) { return x; }, 2, 2.0, 256, 0.5, 4);
        CHECK(r.pass);
        CHECK(r.slope == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(r.dyadic_span >= 4.0);
        CHECK(r.pairs.size() == 256);
        for (const HolderPair& p : r.pairs) CHECK(p.distance > 1e-9);
    }

    TEST_CASE("square-root calibration pairs fit slope one half") {
        std::vector<HolderPair> pairs;
        for (int k = 0; k < 200; ++k) {
            const double r = std::ldexp(1.0, -(k % 20)) * (1.0 + 0.001 * (k / 20));
            pairs.push_back({r, std::sqrt(r)});
        }
        const HolderReport rep = fit_holder(pairs, 0.5, 1.0);
        CHECK(rep.slope == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(rep.pass);
        const HolderReport strict = fit_holder(pairs, 0.8, 1.0);
        CHECK_FALSE(strict.pass);
    }

    TEST_CASE("degenerate pair sets are rejected") {
        std::vector<HolderPair> pairs(10, HolderPair{0.5, 0.5});
        CHECK_THROWS_AS((void)fit_holder(pairs, 0.5, 1.0), ConfigError);
        CHECK_THROWS_AS((void)fit_holder({}, 0.5, 1.0), ConfigError);
    }
}

TEST_SUITE("harness") {
    TEST_CASE("identical perturbations give a zero residual run") {
        const json doc = small_run({{"scenario", "autonomous"}, {"perturbation", {{"identical", true}}}});
        const RunOutcome r = run_experiment(parse_config(doc));
        CHECK(r.exit_code == exit_code::pass);
        CHECK(r.report.at("checks").at("residual_forward").at("max_residual").get<double>() <= 1e-12);
        CHECK(r.report.at("checks").at("residual_backward").at("max_residual").get<double>() <= 1e-12);
    }

    TEST_CASE("reports are reproducible") {
        const ExperimentConfig cfg = parse_config(small_run({{"scenario", "periodic"}}));
        const RunOutcome a = run_experiment(cfg);
        const RunOutcome b = run_experiment(cfg);
        CHECK(a.exit_code == exit_code::pass);
        CHECK(report_payload(a.report) == report_payload(b.report));
        CHECK(report_payload(a.report).find("timings") == std::string::npos);
    }

    TEST_CASE("smallness violation exits with the hypothesis code") {
        const RunOutcome r = run_experiment(parse_config(small_run({{"scenario", "autonomous"}, {"c", 0.2}})));
        CHECK(r.exit_code == exit_code::hypothesis);
        const std::string msg = r.report.at("failure").at("message").get<std::string>();
        CHECK(msg.find("0.148551") != std::string::npos);
        CHECK(r.report.at("failure").at("hypothesis").get<std::string>() == hyp::smallness);
    }

    TEST_CASE("validation names an injected fault") {
        const RunOutcome ok = validate_experiment(parse_config(json{{"scenario", "autonomous"}}));
        CHECK(ok.exit_code == exit_code::pass);
        const RunOutcome bad =
            validate_experiment(parse_config(json{{"scenario", "autonomous"}, {"fault", {{"offset", 2}, {"angle", 0.4}}}}));
        CHECK(bad.exit_code == exit_code::hypothesis);
        CHECK(bad.report.at("failure").at("hypothesis").get<std::string>() == hyp::invariance);
    }

    TEST_CASE("config errors") {
        const json one_d = {{"scenario", "custom"},
                            {"dimension", 1},
                            {"blocks", {{"layout", {0, 0, 1}}, {"unstable", {2.0}}}}};
        CHECK_THROWS_AS((void)parse_config(one_d), ConfigError);
        CHECK_THROWS_AS((void)parse_config(json{{"scenario", "autonomous"}, {"identical", true}}), ConfigError);
        CHECK_THROWS_AS((void)parse_config(json{{"scenario", "nowhere"}}), ConfigError);
        CHECK_THROWS_AS((void)parse_config(json{{"scenario", "autonomous"}, {"tol", -1.0}}), ConfigError);
    }

    TEST_CASE("components run independently") {
        const RunOutcome empty = run_components(json{{"components", json::array()}});
        CHECK(empty.exit_code == exit_code::pass);
        CHECK(empty.report.at("components").empty());

        const json half = {{"scenario", "custom"},
                           {"name", "slow"},
                           {"blocks", {{"layout", {1, 0, 1}}, {"stable", {std::exp(-0.5)}}, {"unstable", {std::exp(0.5)}}}},
                           {"perturbation", {{"f", {{"family", "tanh"}, {"amplitude", "budget"}}}}},
                           {"c", 0.02},
                           {"samples", 20},
                           {"roundtrip_samples", 10}};
        const json doc = {{"components", {small_run({{"scenario", "autonomous"}}), half}}};
        const RunOutcome r = run_components(doc);
        CHECK(r.exit_code == exit_code::pass);
        const auto& rows = r.report.at("components");
        REQUIRE(rows.size() == 2);
        CHECK(rows[0].at("lambda").get<double>() == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(rows[1].at("lambda").get<double>() == doctest::Approx(0.5).epsilon(1e-9));
        CHECK(rows[0].at("c_cap").get<double>() == doctest::Approx(max_admissible_c(1.0)).epsilon(1e-9));
        CHECK(rows[1].at("c_cap").get<double>() == doctest::Approx(max_admissible_c(0.5)).epsilon(1e-9));
        CHECK(rows[1].at("name").get<std::string>() == "slow");
    }

    TEST_CASE("a single component matches a plain run") {
        const json cfg = small_run({{"scenario", "autonomous"}});
        const auto dir = std::filesystem::temp_directory_path() / "rdslin_unit_components";
        std::filesystem::remove_all(dir);
        const RunOutcome comp = run_components(json{{"components", {cfg}}}, dir.string());
        const RunOutcome plain = run_experiment(parse_config(cfg));
        CHECK(comp.exit_code == plain.exit_code);
        std::ifstream in(dir / "component_0" / "report.json");
        REQUIRE(in.good());
        const Report written = Report::parse(in);
        CHECK(report_payload(written) == report_payload(plain.report));
        std::filesystem::remove_all(dir);
    }

    TEST_CASE("outputs are written with the expected headers") {
        const auto dir = std::filesystem::temp_directory_path() / "rdslin_unit_outputs";
        std::filesystem::remove_all(dir);
        const RunOutcome r = run_experiment(parse_config(small_run({{"scenario", "autonomous"}})), dir.string());
        CHECK(r.exit_code == exit_code::pass);
        std::ifstream constants(dir / "constants.csv");
        std::ifstream pairs(dir / "holder_pairs.csv");
        std::string head;
        std::getline(constants, head);
        CHECK(head == "offset,K,Z,M,C,N,d,D");
        std::getline(pairs, head);
        CHECK(head == "distance,image_distance");
        CHECK(std::filesystem::exists(dir / "report.json"));
        std::filesystem::remove_all(dir);
    }
}
