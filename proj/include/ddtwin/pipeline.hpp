#pragma once

// File-level pipeline behind the command line: run manifest loading and the
// validate / elaborate / solve / scenarios / report commands.

#include <string>
#include <utility>
#include <vector>

#include "ddtwin/dsl.hpp"
#include "ddtwin/graph.hpp"
#include "ddtwin/manifest.hpp"
#include "ddtwin/scenario.hpp"
#include "ddtwin/scheduler.hpp"

namespace ddtwin::pipeline {

struct CommandResult {
    int exit_code = 0;  // 0 ok, 1 validation, 2 infeasible baseline, 3 internal
    std::string out_text;
    std::string err_text;
    std::vector<std::pair<std::string, std::string>> files;  // name -> content, relative to the output dir
};

// Paths are stored resolved against the manifest's directory.
struct RunManifest {
    std::string path;
    std::vector<std::string> flows;
    std::vector<std::string> constraints;
    std::string catalog;  // empty: generate from the topology
    std::string topology;
    std::string deployment;
    std::vector<std::string> scenarios;
    std::string out;
    sched::SolveOptions solver;
    std::int64_t seed = 0;
};

RunManifest load_run_manifest(const std::string& path);
RunManifest parse_run_manifest(std::string_view yaml_text, const std::string& path);
// load_run_manifest with errors mapped to a CommandResult (exit 1 or 3).
CommandResult guarded_load(const std::string& path, RunManifest& out);

struct Workspace {
    RunManifest run;
    std::vector<dsl::FlowDef> defs;
    manifest::DeploymentConfig deployment;
    std::vector<manifest::ConstraintDoc> docs;
    std::vector<manifest::FunctionMetadata> metadata;
    manifest::HardwareTopology topo;
    manifest::PatternCatalog catalog;
    std::map<std::string, dsl::LabeledStream> labels;
    std::vector<scenario::ScenarioSpec> extra_scenarios;
};

Workspace load_workspace(const RunManifest& run);
elab::TaskGraph build_graph(const Workspace& ws);

CommandResult cmd_validate(const RunManifest& run);
CommandResult cmd_elaborate(const RunManifest& run);
CommandResult cmd_solve(const RunManifest& run);
CommandResult cmd_scenarios(const RunManifest& run);
// Merges every *.csv under `results_dir` except a previous report.csv.
CommandResult cmd_report(const std::string& results_dir);

std::string solve_summary(const sched::SolveOutcome& outcome, const elab::TaskGraph& graph,
                          const manifest::HardwareTopology& topo, sched::SolveMode mode);

// temp file + rename
void write_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace ddtwin::pipeline
