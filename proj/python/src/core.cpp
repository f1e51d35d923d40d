#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <utility>

#include "rdslin/conjugacy.hpp"
#include "rdslin/errors.hpp"
#include "rdslin/harness.hpp"
#include "rdslin/holder.hpp"
#include "rdslin/version.hpp"

namespace py = pybind11;

namespace {

/// Reports cross the boundary as JSON text; the package wrapper decodes them.
using Result = std::pair<std::string, int>;

Result run(const std::string& config, const std::string& out_dir) {
    const rdslin::ExperimentConfig cfg = rdslin::parse_config(nlohmann::json::parse(config));
    py::gil_scoped_release release;
    const rdslin::RunOutcome out = rdslin::run_experiment(cfg, out_dir);
    return {out.report.dump(), out.exit_code};
}

Result validate(const std::string& config) {
    const rdslin::ExperimentConfig cfg = rdslin::parse_config(nlohmann::json::parse(config));
    py::gil_scoped_release release;
    const rdslin::RunOutcome out = rdslin::validate_experiment(cfg);
    return {out.report.dump(), out.exit_code};
}

Result components(const std::string& doc, const std::string& out_dir) {
    const nlohmann::json parsed = nlohmann::json::parse(doc);
    py::gil_scoped_release release;
    const rdslin::RunOutcome out = rdslin::run_components(parsed, out_dir);
    return {out.report.dump(), out.exit_code};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Linearization of random dynamical systems with Hoelder certificates";

    auto base = py::register_exception<rdslin::Error>(m, "Error");
    py::register_exception<rdslin::ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<rdslin::TruncationError>(m, "TruncationError", base.ptr());
    py::register_exception<rdslin::HypothesisViolation>(m, "HypothesisViolation", base.ptr());
    py::register_exception<rdslin::ConvergenceFailure>(m, "ConvergenceFailure", base.ptr());

    m.attr("EXIT_PASS") = rdslin::exit_code::pass;
    m.attr("EXIT_CONFIG") = rdslin::exit_code::config;
    m.attr("EXIT_HYPOTHESIS") = rdslin::exit_code::hypothesis;
    m.attr("EXIT_CONVERGENCE") = rdslin::exit_code::convergence;

    m.def("version", [] { return std::string(rdslin::kVersion); });
    m.def("run_json", &run, py::arg("config"), py::arg("out_dir") = std::string());
    m.def("validate_json", &validate, py::arg("config"));
    m.def("components_json", &components, py::arg("doc"), py::arg("out_dir") = std::string());
    m.def("report_payload_json", [](const std::string& report) {
        return rdslin::report_payload(rdslin::Report::parse(report));
    });

    m.def("contraction_factor", &rdslin::contraction_factor, py::arg("c"), py::arg("lam"));
    m.def("majorant_factor", &rdslin::majorant_factor, py::arg("lam"));
    m.def("max_admissible_c", &rdslin::max_admissible_c, py::arg("lam"));
    m.def("series_tail", &rdslin::series_tail, py::arg("lam"), py::arg("N"));
    m.def("holder_ratio", &rdslin::holder_ratio, py::arg("rho"), py::arg("c"));
    m.def("holder_c_max", &rdslin::holder_c_max, py::arg("lam"), py::arg("rho"), py::arg("alpha"),
          py::arg("epsilon"));
    m.def(
        "series_B",
        [](double lam, double rho, double alpha, double epsilon, double c) {
            const rdslin::SeriesB b = rdslin::series_B(lam, rho, alpha, epsilon, c);
            py::dict d;
            d["value"] = b.value;
            d["tail"] = b.tail;
            d["terms"] = b.terms;
            d["ratio"] = b.ratio;
            return d;
        },
        py::arg("lam"), py::arg("rho"), py::arg("alpha"), py::arg("epsilon"), py::arg("c"));
}
