#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rdslin/cocycle.hpp"
#include "rdslin/conjugacy.hpp"
#include "rdslin/holder.hpp"
#include "rdslin/perturb.hpp"
#include "rdslin/scenario.hpp"

namespace rdslin {

using Report = nlohmann::ordered_json;

/// Exit codes shared by the CLI and the python bindings.
namespace exit_code {
inline constexpr int pass = 0;
inline constexpr int config = 1;
inline constexpr int hypothesis = 2;
inline constexpr int convergence = 3;
}  // namespace exit_code

struct RunOutcome {
    Report report;
    int exit_code = exit_code::pass;
};

/// Owns every object of one experiment. Stages run in order; each stage fills part of the report.
class Experiment {
public:
    explicit Experiment(ExperimentConfig config);
    ~Experiment();
    Experiment(const Experiment&) = delete;
    Experiment& operator=(const Experiment&) = delete;

    /// Window, cocycle, hypotheses, constants, perturbations, envelopes and series parameters,
    /// enlarging the window until the series reach fits. Throws on the first violation.
    void prepare();
    /// Solves both directions and runs every configured check.
    void solve_and_check();

    [[nodiscard]] RunOutcome run();
    [[nodiscard]] RunOutcome validate();

    [[nodiscard]] const ExperimentConfig& config() const noexcept { return config_; }
    [[nodiscard]] const Cocycle& cocycle() const;
    [[nodiscard]] const DichotomyConstants& constants() const;
    [[nodiscard]] const Perturbation& f() const;
    [[nodiscard]] const Perturbation& g() const;
    [[nodiscard]] const ConjugacyProblem& problem() const;
    [[nodiscard]] const ConjugacyField& forward() const;
    [[nodiscard]] const ConjugacyField& backward() const;
    [[nodiscard]] const std::optional<HolderBudget>& budget() const noexcept { return budget_; }
    [[nodiscard]] double c() const noexcept { return c_; }
    [[nodiscard]] int half_width() const noexcept { return half_width_; }
    [[nodiscard]] const Report& report() const noexcept { return report_; }
    [[nodiscard]] const std::vector<HolderPair>& holder_pairs() const noexcept { return holder_pairs_; }

    /// Per-fiber constants table (offset,K,Z,M,C,N,d,D).
    [[nodiscard]] std::string constants_csv() const;
    [[nodiscard]] std::string holder_pairs_csv() const;

private:
    void build(int half_width);
    void choose_c();
    void build_perturbations();
    void check_perturbations();
    void check_pass(const std::string& name, bool ok);
    void timed(const std::string& stage, const std::function<void()>& body);
    RunOutcome finish(int code);

    ExperimentConfig config_;
    int half_width_ = 0;
    std::unique_ptr<Cocycle> cocycle_;
    std::unique_ptr<DichotomyConstants> constants_;
    double c_ = 0.0;
    std::string c_source_;
    std::optional<HolderBudget> budget_;
    std::unique_ptr<Perturbation> f_, g_;
    std::optional<Tower> tower_;
    FiberScalar D_;
    std::optional<Envelope> C_;
    std::unique_ptr<ConjugacyProblem> problem_;
    std::optional<SeriesParams> params_fwd_, params_bwd_;
    std::unique_ptr<ConjugacyField> fwd_, bwd_;
    std::vector<HolderPair> holder_pairs_;
    std::vector<std::string> failed_checks_;
    Report report_;
    Report timings_;
};

[[nodiscard]] RunOutcome run_experiment(const ExperimentConfig& config, const std::string& out_dir = {});
[[nodiscard]] RunOutcome validate_experiment(const ExperimentConfig& config);

/// The document holds {"components": [config, ...]}; every component runs independently.
[[nodiscard]] RunOutcome run_components(const nlohmann::json& doc, const std::string& out_dir = {});

/// Writes report.json, constants.csv and holder_pairs.csv.
void write_outputs(const Experiment& experiment, const RunOutcome& outcome, const std::string& out_dir);

/// Report without its timings block, serialized; equal for identical configs.
[[nodiscard]] std::string report_payload(const Report& report);

}  // namespace rdslin
