#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ddtwin/diagnostics.hpp"
#include "ddtwin/dsl.hpp"
#include "ddtwin/graph.hpp"
#include "ddtwin/manifest.hpp"
#include "ddtwin/pipeline.hpp"
#include "ddtwin/scenario.hpp"
#include "ddtwin/scheduler.hpp"

namespace py = pybind11;
using namespace ddtwin;

namespace {

sched::SolveMode mode_from(const std::string& m) {
    if (m == "exact") return sched::SolveMode::Exact;
    if (m == "heuristic") return sched::SolveMode::Heuristic;
    throw py::value_error("mode must be exact or heuristic, got " + m);
}

py::dict command(const std::string& name, const std::string& manifest, std::optional<std::string> out,
                 std::optional<std::int64_t> seed, std::optional<std::string> mode) {
    if (name != "validate" && name != "elaborate" && name != "solve" && name != "scenarios" && name != "report")
        throw py::value_error("unknown command " + name);
    pipeline::CommandResult r;
    pipeline::RunManifest run;
    {
        py::gil_scoped_release nogil;
        r = pipeline::guarded_load(manifest, run);
    }
    if (r.exit_code == 0) {
        if (out) run.out = *out;
        if (seed) run.seed = *seed;
        if (mode) run.solver.mode = mode_from(*mode);
        py::gil_scoped_release nogil;
        if (name == "validate") r = pipeline::cmd_validate(run);
        else if (name == "elaborate") r = pipeline::cmd_elaborate(run);
        else if (name == "solve") r = pipeline::cmd_solve(run);
        else if (name == "scenarios") r = pipeline::cmd_scenarios(run);
        else r = pipeline::cmd_report(run.out);
    }
    py::dict files;
    for (const auto& [k, v] : r.files) files[py::str(k)] = v;
    py::dict d;
    d["exit_code"] = r.exit_code;
    d["stdout"] = r.out_text;
    d["stderr"] = r.err_text;
    d["files"] = files;
    d["out"] = run.out;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "dataflow scheduling twin: parsing, elaboration, best-case solving and scenario ranking";
    py::register_exception<DiagnosticError>(m, "DiagnosticError", PyExc_ValueError);

    m.def("run_command", &command, py::arg("command"), py::arg("manifest"), py::arg("out") = py::none(),
          py::arg("seed") = py::none(), py::arg("mode") = py::none(),
          "Run validate/elaborate/solve/scenarios/report in process. Nothing is written; "
          "returns exit_code, stdout, stderr and files (name -> content).");
    m.def("report_dir", [](const std::string& dir) {
        auto r = pipeline::cmd_report(dir);
        py::dict files;
        for (const auto& [k, v] : r.files) files[py::str(k)] = v;
        py::dict d;
        d["exit_code"] = r.exit_code;
        d["stdout"] = r.out_text;
        d["stderr"] = r.err_text;
        d["files"] = files;
        return d;
    }, py::arg("results_dir"));

    m.def("format_flows", [](const std::string& text) { return dsl::print_flows(dsl::parse_flow_source(text)); },
          py::arg("text"), "parse flow source and print it back in canonical form");
    m.def("generate_catalog", [](const std::string& topology_yaml) {
        return manifest::write_pattern_catalog(
            manifest::generate_patterns_from_topology(manifest::parse_topology(topology_yaml)));
    }, py::arg("topology_yaml"));

    m.def("solve_graph", [](const std::string& graph_json, const std::string& topology_yaml, const std::string& mode,
                            std::int64_t node_limit, std::uint64_t seed) {
        auto g = elab::graph_from_json(graph_json);
        auto topo = manifest::parse_topology(topology_yaml);
        auto cat = manifest::generate_patterns_from_topology(topo);
        sched::SolveOptions o;
        o.mode = mode_from(mode);
        o.node_limit = node_limit;
        o.seed = seed;
        sched::SolveOutcome r;
        {
            py::gil_scoped_release nogil;
            r = sched::solve_best_case(g, topo, cat, o);
        }
        py::dict d;
        d["status"] = sched::to_string(r.status);
        d["makespan"] = r.schedule ? py::object(py::int_(r.schedule->makespan)) : py::object(py::none());
        d["witness"] = r.witness;
        d["nodes"] = r.stats.nodes;
        d["schedule_json"] = sched::schedule_to_json(r, g);
        return d;
    }, py::arg("graph_json"), py::arg("topology_yaml"), py::arg("mode") = "exact", py::arg("node_limit") = 5'000'000,
       py::arg("seed") = 0);

    m.def("check_schedule", [](const std::string& schedule_json, const std::string& graph_json,
                               const std::string& topology_yaml) {
        auto g = elab::graph_from_json(graph_json);
        auto topo = manifest::parse_topology(topology_yaml);
        auto cat = manifest::generate_patterns_from_topology(topo);
        auto s = sched::schedule_from_json(schedule_json, g);
        std::vector<std::tuple<std::string, std::string, std::string>> out;
        for (const auto& v : sched::check_schedule(s, g, topo, cat))
            out.emplace_back(sched::to_string(v.kind), v.subject, v.message);
        return out;
    }, py::arg("schedule_json"), py::arg("graph_json"), py::arg("topology_yaml"));

    m.def("delta_pct", &scenario::delta_pct, py::arg("baseline"), py::arg("latency"));
    m.def("classify", [](std::optional<int> delta, bool infeasible) {
        return std::string(scenario::to_string(scenario::classify(
            delta, infeasible ? scenario::Outcome::Infeasible : scenario::Outcome::Feasible, {})));
    }, py::arg("delta"), py::arg("infeasible") = false);
}
