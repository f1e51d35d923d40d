#include "rdslin/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <Eigen/LU>

#include "rdslin/errors.hpp"

namespace rdslin {

using nlohmann::json;

std::vector<std::string> builtin_scenarios() { return {"autonomous", "periodic", "center3d", "bernoulli"}; }

json scenario_defaults(const std::string& name) {
    const double e = std::exp(1.0);
    if (name == "autonomous") {
        return {
            {"scenario", "autonomous"},
            {"dimension", 2},
            {"base", {{"kind", "point"}}},
            {"blocks", {{"layout", {1, 0, 1}}, {"stable", {1.0 / e}}, {"unstable", {e}}}},
            {"perturbation", {{"f", {{"family", "tanh"}, {"amplitude", 0.05}}}, {"g", {{"family", "zero"}}}}},
            {"c", 0.05},
            {"probe_fibers", {0}},
        };
    }
    if (name == "periodic") {
        return {
            {"scenario", "periodic"},
            {"dimension", 2},
            {"base", {{"kind", "periodic"}, {"period", 2}}},
            {"blocks", {{"layout", {1, 0, 1}}, {"stable", {0.5, 1.0 / 3.0}}, {"unstable", {3.0, 2.0}}}},
            {"perturbation", {{"f", {{"family", "tanh"}, {"amplitude", "budget"}}}, {"g", {{"family", "zero"}}}}},
            {"c", "auto"},
            {"probe_fibers", {0, 1}},
        };
    }
    if (name == "center3d") {
        return {
            {"scenario", "center3d"},
            {"dimension", 3},
            {"base", {{"kind", "rotation"}}},
            {"blocks",
             {{"layout", {1, 1, 1}},
              {"stable", {1.0 / e}},
              {"center", {1.0}},
              {"unstable", {e}},
              {"modulation", 0.2},
              {"basis", {{1.0, 0.0, 0.3}, {0.0, 1.0, 0.0}, {0.2, 0.5, 1.0}}}}},
            {"perturbation",
             {{"f", {{"family", "sine"}, {"amplitude", "budget"}}}, {"g", {{"family", "tanh"}, {"amplitude", "budget"}}}}},
            {"c", "auto"},
            {"probe_fibers", {0, 1, 2}},
        };
    }
    if (name == "bernoulli") {
        return {
            {"scenario", "bernoulli"},
            {"dimension", 2},
            {"base", {{"kind", "bernoulli"}, {"seed", 7}, {"alphabet", 2}}},
            {"blocks",
             {{"layout", {1, 0, 1}},
              {"stable", {std::exp(-0.8), std::exp(-1.3)}},
              {"unstable", {std::exp(1.2), std::exp(0.9)}},
              {"basis", {{1.0, 0.4}, {0.0, 1.0}}}}},
            {"perturbation",
             {{"f", {{"family", "tanh"}, {"amplitude", "tower"}}}, {"g", {{"family", "bump"}, {"amplitude", "budget"}}}}},
            {"c", "auto"},
            {"probe_fibers", {0, 1, 2}},
        };
    }
    if (name == "custom") {
        return json::object({{"scenario", "custom"}});
    }
    throw ConfigError("unknown scenario '" + name + "'");
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file '" + path + "'");
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
}

namespace {

Mat parse_matrix(const json& j, int dim, const std::string& what) {
    if (!j.is_array() || static_cast<int>(j.size()) != dim) {
        throw ConfigError(what + " must be a " + std::to_string(dim) + "x" + std::to_string(dim) + " array");
    }
    Mat m(dim, dim);
    for (int r = 0; r < dim; ++r) {
        const json& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<int>(row.size()) != dim) {
            throw ConfigError(what + " row " + std::to_string(r) + " must have " + std::to_string(dim) + " entries");
        }
        for (int c = 0; c < dim; ++c) {
            m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
        }
    }
    return m;
}

std::vector<double> parse_list(const json& j, const std::string& what) {
    if (j.is_number()) {
        return {j.get<double>()};
    }
    if (!j.is_array()) {
        throw ConfigError(what + " must be a number or an array of numbers");
    }
    std::vector<double> out;
    for (const auto& v : j) {
        out.push_back(v.get<double>());
    }
    return out;
}

PerturbationSpec parse_perturbation(const json& j, const std::string& what) {
    PerturbationSpec s;
    if (j.is_null()) {
        return s;
    }
    s.family = parse_family(j.value("family", std::string("zero")));
    if (s.family == Family::custom) {
        throw ConfigError(what + ": family 'custom' cannot be read from a config");
    }
    const json amp = j.contains("amplitude") ? j.at("amplitude") : json(0.0);
    if (amp.is_number()) {
        s.mode = AmplitudeMode::value;
        s.amplitude = amp.get<double>();
        if (!(s.amplitude >= 0.0)) {
            throw ConfigError(what + ": amplitude must be nonnegative");
        }
    } else if (amp == "budget") {
        s.mode = AmplitudeMode::budget;
    } else if (amp == "tower") {
        s.mode = AmplitudeMode::tower;
    } else {
        throw ConfigError(what + ": amplitude must be a number, \"budget\" or \"tower\"");
    }
    if (s.family == Family::zero) {
        s.mode = AmplitudeMode::value;
        s.amplitude = 0.0;
    }
    return s;
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [k, v] : j.items()) {
        if (!allowed.count(k)) {
            throw ConfigError("unknown field '" + k + "' in " + where);
        }
    }
}

double multiplier(const std::vector<double>& list, const FiberData& fd, const char* block) {
    if (list.size() == 1) {
        return list[0];
    }
    const auto s = static_cast<std::size_t>(fd.symbol);
    if (s >= list.size()) {
        throw ConfigError(std::string(block) + " multipliers list has no entry for symbol " + std::to_string(fd.symbol));
    }
    return list[s];
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
    if (!doc.is_object()) {
        throw ConfigError("config must be a JSON object");
    }
    const std::string name = doc.value("scenario", std::string("custom"));
    json merged = scenario_defaults(name);
    merged.merge_patch(doc);
    check_keys(merged,
               {"name", "scenario", "dimension", "base", "half_width", "blocks", "matrices", "projections",
                "perturbation", "c", "alpha", "tol", "samples", "roundtrip_samples", "contraction_pairs",
                "contraction_points", "holder_pairs", "suite_samples", "probe_fibers", "sample_radius", "seed",
                "strict_literal_mode", "fault", "out"},
               "config");
    ExperimentConfig cfg;
    cfg.resolved = merged;
    try {
        cfg.scenario = name;
        cfg.dimension = merged.value("dimension", 2);
        if (cfg.dimension < 1 || cfg.dimension > kMaxDim) {
            throw ConfigError("dimension must be between 1 and " + std::to_string(kMaxDim));
        }
        const json base = merged.value("base", json::object());
        check_keys(base, {"kind", "period", "seed", "half_width", "alphabet", "angle"}, "base");
        cfg.base.kind = parse_base_kind(base.value("kind", std::string("point")));
        cfg.base.period = base.value("period", 1);
        cfg.base.seed = base.value("seed", std::uint64_t{0});
        cfg.base.alphabet = base.value("alphabet", 2);
        cfg.base.angle = base.value("angle", cfg.base.angle);
        cfg.half_width = base.value("half_width", merged.value("half_width", 64));
        if (cfg.half_width < 4) {
            throw ConfigError("half_width must be at least 4");
        }

        if (name == "custom" && merged.contains("matrices")) {
            for (const auto& m : merged.at("matrices")) {
                cfg.matrices.push_back(parse_matrix(m, cfg.dimension, "matrices entry"));
            }
            if (!merged.contains("projections")) {
                throw ConfigError("custom matrices need a 'projections' list");
            }
            for (const auto& p : merged.at("projections")) {
                check_keys(p, {"stable", "center", "unstable"}, "projections entry");
                ProjectionTriple t;
                t[0] = parse_matrix(p.at("stable"), cfg.dimension, "stable projection");
                t[1] = p.contains("center") ? parse_matrix(p.at("center"), cfg.dimension, "center projection")
                                            : Mat(Mat::Zero(cfg.dimension, cfg.dimension));
                t[2] = parse_matrix(p.at("unstable"), cfg.dimension, "unstable projection");
                cfg.projections.push_back(std::move(t));
            }
            if (cfg.matrices.empty() || cfg.projections.empty()) {
                throw ConfigError("custom matrices and projections must be nonempty");
            }
        } else {
            const json blocks = merged.value("blocks", json::object());
            check_keys(blocks, {"layout", "stable", "center", "unstable", "modulation", "basis"}, "blocks");
            const json layout = blocks.value("layout", json::array({1, 0, 1}));
            if (!layout.is_array() || layout.size() != 3) {
                throw ConfigError("blocks.layout must be [stable, center, unstable]");
            }
            cfg.blocks.layout = {layout[0].get<int>(), layout[1].get<int>(), layout[2].get<int>()};
            const BlockLayout& L = cfg.blocks.layout;
            if (L.stable < 0 || L.center < 0 || L.unstable < 0) {
                throw ConfigError("block sizes must be nonnegative");
            }
            if (L.dim() != cfg.dimension) {
                throw ConfigError("block layout has dimension " + std::to_string(L.dim()) + " but dimension is " +
                                  std::to_string(cfg.dimension));
            }
            if (L.unstable > 0 && cfg.dimension < 2) {
                throw ConfigError("an unstable block needs dimension at least 2");
            }
            auto list = [&](const char* key, int size) {
                if (size == 0) {
                    return std::vector<double>{};
                }
                if (!blocks.contains(key)) {
                    throw ConfigError(std::string("blocks.") + key + " multipliers are missing");
                }
                auto v = parse_list(blocks.at(key), std::string("blocks.") + key);
                if (v.empty()) {
                    throw ConfigError(std::string("blocks.") + key + " multipliers are empty");
                }
                return v;
            };
            cfg.blocks.stable = list("stable", L.stable);
            cfg.blocks.center = list("center", L.center);
            cfg.blocks.unstable = list("unstable", L.unstable);
            cfg.blocks.modulation = blocks.value("modulation", 0.0);
            cfg.blocks.basis = blocks.contains("basis") ? parse_matrix(blocks.at("basis"), cfg.dimension, "blocks.basis")
                                                        : Mat(Mat::Identity(cfg.dimension, cfg.dimension));
        }

        const json pert = merged.value("perturbation", json::object());
        check_keys(pert, {"f", "g", "identical"}, "perturbation");
        cfg.f = parse_perturbation(pert.value("f", json()), "perturbation.f");
        cfg.g = parse_perturbation(pert.value("g", json()), "perturbation.g");
        cfg.identical = pert.value("identical", false);
        if (cfg.identical) {
            cfg.g = cfg.f;
        }

        const json c = merged.value("c", json("auto"));
        if (c.is_number()) {
            cfg.c = c.get<double>();
            if (!(*cfg.c > 0.0)) {
                throw ConfigError("c must be positive");
            }
        } else if (c != "auto") {
            throw ConfigError("c must be a number or \"auto\"");
        }
        const json alpha = merged.value("alpha", json());
        if (alpha.is_number()) {
            cfg.alpha = alpha.get<double>();
            if (!(*cfg.alpha > 0.0 && *cfg.alpha <= 1.0)) {
                throw ConfigError("alpha must lie in (0, 1]");
            }
        } else if (!alpha.is_null()) {
            throw ConfigError("alpha must be a number or null");
        }
        cfg.tol = merged.value("tol", 1e-6);
        if (!(cfg.tol > 0.0)) {
            throw ConfigError("tol must be positive");
        }
        cfg.samples = merged.value("samples", 500);
        cfg.roundtrip_samples = merged.value("roundtrip_samples", 100);
        cfg.contraction_pairs = merged.value("contraction_pairs", 0);
        cfg.contraction_points = merged.value("contraction_points", 20);
        cfg.holder_pairs = merged.value("holder_pairs", 256);
        cfg.suite_samples = merged.value("suite_samples", 0);
        if (cfg.samples < 1 || cfg.roundtrip_samples < 0 || cfg.contraction_pairs < 0 || cfg.contraction_points < 1 ||
            cfg.holder_pairs < 0 || cfg.suite_samples < 0) {
            throw ConfigError("sample counts must be nonnegative (samples at least 1)");
        }
        cfg.probe_fibers = merged.value("probe_fibers", std::vector<int>{0});
        if (cfg.probe_fibers.empty()) {
            throw ConfigError("probe_fibers must be nonempty");
        }
        cfg.sample_radius = merged.value("sample_radius", 2.0);
        if (!(cfg.sample_radius > 0.0)) {
            throw ConfigError("sample_radius must be positive");
        }
        cfg.seed = merged.value("seed", std::uint64_t{1});
        cfg.strict_literal_mode = merged.value("strict_literal_mode", false);
        if (merged.contains("fault") && !merged.at("fault").is_null()) {
            const json& fj = merged.at("fault");
            check_keys(fj, {"offset", "angle"}, "fault");
            cfg.fault.enabled = true;
            cfg.fault.offset = fj.value("offset", 0);
            cfg.fault.angle = fj.value("angle", 0.3);
        }
        cfg.out = merged.value("out", std::string());
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    return cfg;
}

Cocycle build_cocycle(const ExperimentConfig& cfg, int half_width) {
    const OrbitWindow window = build_window(cfg.base, half_width);
    const int d = cfg.dimension;
    Cocycle::MatrixFn matrix;
    Cocycle::SplittingFn splitting;
    if (!cfg.matrices.empty()) {
        const auto mats = cfg.matrices;
        const auto projs = cfg.projections;
        auto pick = [](const auto& list, const FiberData& fd) -> const auto& {
            if (list.size() == 1) {
                return list[0];
            }
            const auto s = static_cast<std::size_t>(fd.symbol);
            if (s >= list.size()) {
                throw ConfigError("custom scenario has no entry for symbol " + std::to_string(fd.symbol));
            }
            return list[s];
        };
        matrix = [mats, pick](int, const FiberData& fd) { return pick(mats, fd); };
        splitting = [projs, pick](int, const FiberData& fd) { return pick(projs, fd); };
    } else {
        const BlockSpec b = cfg.blocks;
        Eigen::FullPivLU<Mat> lu(b.basis);
        if (!lu.isInvertible() || condition_number(b.basis) > Cocycle::kConditionCap) {
            throw ConfigError("blocks.basis is singular");
        }
        const Mat V = b.basis;
        const Mat Vinv = lu.inverse();
        matrix = [b, V, Vinv, d](int, const FiberData& fd) {
            const double mod = std::exp(b.modulation * std::sin(2.0 * M_PI * fd.phase));
            Vec diag(d);
            int i = 0;
            for (int k = 0; k < b.layout.stable; ++k) diag(i++) = multiplier(b.stable, fd, "stable") * mod;
            for (int k = 0; k < b.layout.center; ++k) diag(i++) = multiplier(b.center, fd, "center");
            for (int k = 0; k < b.layout.unstable; ++k) diag(i++) = multiplier(b.unstable, fd, "unstable") / mod;
            return Mat(V * diag.asDiagonal() * Vinv);
        };
        const ProjectionTriple proj = coordinate_projections(b.layout, V);
        splitting = [proj](int, const FiberData&) { return proj; };
    }
    Cocycle cocycle(window, d, matrix, splitting);
    if (cfg.fault.enabled) {
        cocycle.rotate_splitting_at(cfg.fault.offset, cfg.fault.angle);
    }
    return cocycle;
}

}  // namespace rdslin
