#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rdslin/cocycle.hpp"
#include "rdslin/driving.hpp"
#include "rdslin/perturb.hpp"

namespace rdslin {

enum class AmplitudeMode { value, budget, tower };

struct PerturbationSpec {
    Family family = Family::zero;
    AmplitudeMode mode = AmplitudeMode::value;
    double amplitude = 0.0;  ///< used in value mode
};

/// Block-diagonal cocycle in a fixed basis: per-symbol multipliers for each block,
/// optionally modulated by the fiber phase as m exp(modulation sin(2 pi phase)).
struct BlockSpec {
    BlockLayout layout;
    std::vector<double> stable, center, unstable;
    double modulation = 0.0;
    Mat basis;
};

struct FaultSpec {
    bool enabled = false;
    int offset = 0;
    double angle = 0.0;
};

struct ExperimentConfig {
    std::string scenario = "custom";
    int dimension = 2;
    BaseSpec base;
    int half_width = 64;
    BlockSpec blocks;
    std::vector<Mat> matrices;                  ///< custom scenario, one per symbol
    std::vector<ProjectionTriple> projections;  ///< custom scenario, one per symbol
    PerturbationSpec f, g;
    bool identical = false;                     ///< g := f
    std::optional<double> c;                    ///< empty means auto
    std::optional<double> alpha;
    double tol = 1e-6;
    int samples = 500;
    int roundtrip_samples = 100;
    int contraction_pairs = 0;
    int contraction_points = 20;
    int holder_pairs = 256;
    int suite_samples = 0;
    std::vector<int> probe_fibers{0};
    double sample_radius = 2.0;
    std::uint64_t seed = 1;
    bool strict_literal_mode = false;
    FaultSpec fault;
    std::string out;
    nlohmann::json resolved;  ///< the config after merging scenario defaults
};

[[nodiscard]] std::vector<std::string> builtin_scenarios();
/// Default document of a built-in scenario; throws ConfigError for unknown names.
[[nodiscard]] nlohmann::json scenario_defaults(const std::string& name);

/// Merges the scenario defaults under the given document and validates every field.
[[nodiscard]] ExperimentConfig parse_config(const nlohmann::json& doc);
[[nodiscard]] nlohmann::json read_json_file(const std::string& path);

[[nodiscard]] Cocycle build_cocycle(const ExperimentConfig& config, int half_width);

}  // namespace rdslin
