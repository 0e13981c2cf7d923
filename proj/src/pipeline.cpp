#include "ddtwin/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <functional>
#include <map>
#include <fstream>
#include <set>
#include <sstream>

#include <unistd.h>
#include <yaml-cpp/yaml.h>

namespace ddtwin::pipeline {

namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DiagnosticError("cannot read file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_atomic(const std::string& path, const std::string& content) {
    fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    fs::path tmp = p;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("short write to " + tmp.string());
    }
    fs::rename(tmp, p);
}

namespace {

[[noreturn]] void fail_at(const std::string& file, const YAML::Node& n, const std::string& msg) {
    SourceLoc loc;
    if (n.IsDefined() && n.Mark().line >= 0) loc = {n.Mark().line + 1, n.Mark().column + 1};
    throw DiagnosticError(file, loc, "run manifest: " + msg);
}

std::vector<std::string> path_list(const std::string& file, const YAML::Node& n, const std::string& key) {
    std::vector<std::string> out;
    if (!n.IsDefined() || n.IsNull()) return out;
    if (n.IsScalar()) return {n.Scalar()};
    if (!n.IsSequence()) fail_at(file, n, "'" + key + "' must be a path or a list of paths");
    for (const auto& x : n) out.push_back(x.Scalar());
    return out;
}

std::string resolve(const fs::path& base, const std::string& p) {
    fs::path q(p);
    return (q.is_absolute() ? q : base / q).lexically_normal().string();
}

std::string render(const DiagnosticError& e) {
    std::string out;
    for (const auto& d : e.diagnostics()) out += d.render() + "\n";
    return out;
}

CommandResult guarded(const std::function<CommandResult()>& body) {
    try {
        return body();
    } catch (const DiagnosticError& e) {
        return {1, "", render(e), {}};
    } catch (const std::exception& e) {
        return {3, "", std::string("internal error: ") + e.what() + "\n", {}};
    }
}

std::string ratio2(std::int64_t num, std::int64_t den) {
    // two decimals, half up
    std::int64_t r = (200 * num + den) / (2 * den);
    std::string frac = std::to_string(r % 100);
    if (frac.size() < 2) frac = "0" + frac;
    return std::to_string(r / 100) + "." + frac;
}

std::string pct1(std::int64_t num, std::int64_t den) {
    std::int64_t r = den > 0 ? (2000 * num + den) / (2 * den) : 0;
    return std::to_string(r / 10) + "." + std::to_string(r % 10) + "%";
}

}  // namespace

RunManifest parse_run_manifest(std::string_view yaml_text, const std::string& path) {
    YAML::Node doc;
    try {
        doc = YAML::Load(std::string(yaml_text));
    } catch (const YAML::ParserException& e) {
        throw DiagnosticError(path, SourceLoc{e.mark.line + 1, e.mark.column + 1}, e.msg);
    }
    if (!doc.IsMap()) fail_at(path, doc, "expected a mapping");
    static const std::set<std::string> known = {"flows", "constraints", "catalog", "topology", "deployment",
                                                "scenarios", "out", "solver"};
    for (const auto& kv : doc)
        if (!known.count(kv.first.Scalar())) fail_at(path, kv.first, "unknown key '" + kv.first.Scalar() + "'");

    fs::path base = fs::path(path).parent_path();
    RunManifest run;
    run.path = path;
    for (const auto& p : path_list(path, doc["flows"], "flows")) run.flows.push_back(resolve(base, p));
    for (const auto& p : path_list(path, doc["constraints"], "constraints")) run.constraints.push_back(resolve(base, p));
    for (const auto& p : path_list(path, doc["scenarios"], "scenarios")) run.scenarios.push_back(resolve(base, p));
    if (run.flows.empty()) fail_at(path, doc, "missing required key 'flows'");
    if (!doc["topology"].IsScalar()) fail_at(path, doc, "missing required key 'topology'");
    if (!doc["deployment"].IsScalar()) fail_at(path, doc, "missing required key 'deployment'");
    run.topology = resolve(base, doc["topology"].Scalar());
    run.deployment = resolve(base, doc["deployment"].Scalar());
    if (doc["catalog"].IsScalar()) run.catalog = resolve(base, doc["catalog"].Scalar());
    run.out = resolve(base, doc["out"].IsScalar() ? doc["out"].Scalar() : "out");

    if (YAML::Node s = doc["solver"]; s.IsDefined() && !s.IsNull()) {
        if (!s.IsMap()) fail_at(path, s, "'solver' must be a mapping");
        try {
            if (s["mode"].IsDefined()) {
                std::string m = s["mode"].Scalar();
                if (m == "exact") run.solver.mode = sched::SolveMode::Exact;
                else if (m == "heuristic") run.solver.mode = sched::SolveMode::Heuristic;
                else fail_at(path, s["mode"], "solver.mode must be 'exact' or 'heuristic'");
            }
            if (s["node_limit"].IsDefined()) run.solver.node_limit = s["node_limit"].as<std::int64_t>();
            if (s["time_limit_s"].IsDefined()) run.solver.time_limit_s = s["time_limit_s"].as<double>();
            if (s["seed"].IsDefined()) run.seed = s["seed"].as<std::int64_t>();
        } catch (const YAML::Exception& e) {
            fail_at(path, s, std::string("bad solver option: ") + e.what());
        }
        if (run.solver.node_limit <= 0) fail_at(path, s, "solver.node_limit must be > 0");
    }

    std::vector<std::string> all = run.flows;
    all.insert(all.end(), run.constraints.begin(), run.constraints.end());
    all.insert(all.end(), run.scenarios.begin(), run.scenarios.end());
    all.push_back(run.topology);
    all.push_back(run.deployment);
    if (!run.catalog.empty()) all.push_back(run.catalog);
    std::vector<Diagnostic> missing;
    for (const auto& p : all)
        if (!fs::exists(p)) missing.push_back({Severity::Error, {}, "missing file: " + p, path});
    if (!missing.empty()) throw DiagnosticError(std::move(missing));
    return run;
}

RunManifest load_run_manifest(const std::string& path) {
    if (!fs::exists(path)) throw DiagnosticError("missing file: " + path);
    return parse_run_manifest(read_file(path), path);
}

CommandResult guarded_load(const std::string& path, RunManifest& out) {
    return guarded([&] {
        out = load_run_manifest(path);
        return CommandResult{};
    });
}

Workspace load_workspace(const RunManifest& run) {
    Workspace ws;
    ws.run = run;
    ws.deployment = manifest::parse_deployment(read_file(run.deployment), run.deployment);

    std::map<std::string, std::string> flow_origin;
    for (const auto& f : run.flows) {
        for (auto& d : dsl::parse_flow_source(read_file(f), f)) {
            auto [it, fresh] = flow_origin.emplace(d.name, f);
            if (!fresh)
                throw DiagnosticError(f, d.loc, "duplicate flow name '" + d.name + "' (also in " + it->second + ")");
            ws.defs.push_back(std::move(d));
        }
    }
    dsl::SymbolTable symbols(ws.deployment.symbols);
    dsl::validate_flows(ws.defs, symbols, run.flows.size() == 1 ? run.flows.front() : "<flows>");
    ws.labels = dsl::collect_labels(ws.defs, run.flows.size() == 1 ? run.flows.front() : "<flows>");

    std::vector<std::string> constraint_files = run.constraints;
    fs::path dep_dir = fs::path(run.deployment).parent_path();
    for (const auto& m : ws.deployment.metadata_files) {
        std::string p = resolve(dep_dir, m);
        if (!fs::exists(p)) throw DiagnosticError(run.deployment, {}, "missing file: " + p);
        if (std::find(constraint_files.begin(), constraint_files.end(), p) == constraint_files.end())
            constraint_files.push_back(p);
    }
    std::map<std::string, std::string> fn_origin;
    for (const auto& f : constraint_files) {
        for (auto& d : manifest::parse_constraint_stream(read_file(f), f)) {
            if (const auto* md = std::get_if<manifest::FunctionMetadata>(&d)) {
                auto [it, fresh] = fn_origin.emplace(md->name, f);
                if (!fresh)
                    throw DiagnosticError(f, {}, "duplicate metadata for function '" + md->name + "' (also in " +
                                                     it->second + ")");
                ws.metadata.push_back(*md);
            }
            ws.docs.push_back(std::move(d));
        }
    }

    ws.topo = manifest::parse_topology(read_file(run.topology), run.topology);
    if (run.catalog.empty()) {
        ws.catalog = manifest::generate_patterns_from_topology(ws.topo);
    } else {
        ws.catalog = manifest::parse_pattern_catalog(read_file(run.catalog), run.catalog);
        ws.catalog.check_against(ws.topo, run.catalog);
    }
    for (const auto& f : run.scenarios)
        for (auto& s : scenario::parse_scenario_specs(read_file(f), f)) ws.extra_scenarios.push_back(std::move(s));
    return ws;
}

elab::TaskGraph build_graph(const Workspace& ws) {
    dsl::SymbolTable symbols(ws.deployment.symbols);
    auto g = elab::elaborate(ws.defs, ws.deployment.entry_flow, symbols, ws.metadata, ws.catalog);
    g.max_start_lag = ws.deployment.max_start_lag;
    g.assignments = ws.deployment.assignments;
    g.slot_symbol = ws.deployment.slot_symbol;
    return elab::bind_timing(std::move(g), ws.docs, ws.labels, ws.deployment.slot_budget);
}

CommandResult cmd_validate(const RunManifest& run) {
    return guarded([&] {
        auto ws = load_workspace(run);
        auto g = build_graph(ws);
        CommandResult r;
        std::vector<Diagnostic> errors;
        for (const auto& f : elab::check_static(g, ws.topo)) {
            bool warn = f.kind == elab::FindingKind::UnreachableTask;
            Diagnostic d{warn ? Severity::Warning : Severity::Error, {},
                         std::string(elab::to_string(f.kind)) + ": " + f.message, ""};
            if (warn) r.err_text += d.render() + "\n";
            else errors.push_back(std::move(d));
        }
        if (!errors.empty()) throw DiagnosticError(std::move(errors));
        r.out_text = "ok: " + std::to_string(ws.defs.size()) + " flows, " + std::to_string(ws.metadata.size()) +
                     " functions, " + std::to_string(ws.catalog.size()) + " patterns, " +
                     std::to_string(g.tasks.size()) + " tasks, " + std::to_string(g.buffers.size()) +
                     " buffers, deadline " + scenario::group_digits(g.deadline) + " cycles\n";
        return r;
    });
}

CommandResult cmd_elaborate(const RunManifest& run) {
    return guarded([&] {
        auto ws = load_workspace(run);
        auto g = build_graph(ws);
        CommandResult r;
        r.files.emplace_back("graph.json", elab::graph_to_json(g));
        r.out_text = std::to_string(g.tasks.size()) + " tasks, " + std::to_string(g.buffers.size()) +
                     " buffers, deadline " + scenario::group_digits(g.deadline) + " cycles\n";
        return r;
    });
}

std::string solve_summary(const sched::SolveOutcome& o, const elab::TaskGraph& g,
                          const manifest::HardwareTopology& topo, sched::SolveMode mode) {
    std::string s;
    s += std::string("status: ") + sched::to_string(o.status);
    if (o.status == sched::SolveStatus::Optimal) s += " (proven minimum)";
    if (o.status == sched::SolveStatus::Feasible) s += " (heuristic, not proven optimal)";
    s += "\nmode: " + std::string(mode == sched::SolveMode::Exact ? "exact" : "heuristic") + "\n";
    s += "search nodes: " + std::to_string(o.stats.nodes) + "\n";
    if (!o.stats.rejections.empty()) {
        s += "rejections:";
        for (const auto& [k, v] : o.stats.rejections) s += " " + k + "=" + std::to_string(v);
        s += "\n";
    }
    if (!o.schedule) {
        if (!o.witness.empty()) s += "witness: " + o.witness + "\n";
        return s;
    }
    const auto& sc = *o.schedule;
    s += "makespan: " + scenario::group_digits(sc.makespan) + " cycles\n";
    if (g.deadline > 0)
        s += scenario::group_digits(sc.makespan) + " / " + scenario::group_digits(g.deadline) + " = " +
             ratio2(sc.makespan, g.deadline) + " of slot\n";
    for (const auto& core : topo.cores) {
        Cycles busy = 0;
        int n = 0;
        for (std::size_t t = 0; t < g.tasks.size(); ++t)
            if (sc.tasks[t].core == core.id) busy += g.tasks[t].runtime, ++n;
        s += "core " + core.id + ": " + std::to_string(n) + " tasks, busy " + scenario::group_digits(busy) +
             " cycles, " + pct1(busy, sc.makespan) + " of makespan\n";
    }
    std::map<std::string, int> by_class;
    for (const auto& tr : sc.transfers)
        if (tr)
            if (auto c = manifest::classify_pattern(tr->pattern)) ++by_class[manifest::to_string(c->cls)];
    s += "transfers:";
    for (const auto& [k, v] : by_class) s += " " + k + "=" + std::to_string(v);
    s += "\n";
    return s;
}

sched::SolveOptions solver_opts(const RunManifest& run) {
    auto o = run.solver;
    o.seed = static_cast<std::uint64_t>(run.seed);
    return o;
}

CommandResult cmd_solve(const RunManifest& run) {
    return guarded([&] {
        auto ws = load_workspace(run);
        auto g = build_graph(ws);
        auto o = sched::solve_best_case(g, ws.topo, ws.catalog, solver_opts(run));
        std::vector<sched::Violation> v;
        if (o.schedule) v = sched::check_schedule(*o.schedule, g, ws.topo, ws.catalog);
        CommandResult r;
        r.out_text = solve_summary(o, g, ws.topo, run.solver.mode);
        if (!v.empty()) r.out_text += "violations: " + std::to_string(v.size()) + "\n";
        r.files.emplace_back("schedule.json", sched::schedule_to_json(o, g, v));
        r.files.emplace_back("summary.txt", r.out_text);
        r.out_text += "seed: " + std::to_string(run.seed) + "\n";
        if (o.status == sched::SolveStatus::Infeasible || o.status == sched::SolveStatus::Unknown) r.exit_code = 2;
        if (!v.empty()) {
            r.exit_code = 3;
            r.err_text = "internal error: solver schedule fails its own check\n";
        }
        return r;
    });
}

CommandResult cmd_scenarios(const RunManifest& run) {
    return guarded([&] {
        auto ws = load_workspace(run);
        auto g = build_graph(ws);
        CommandResult r;
        auto base = sched::solve_best_case(g, ws.topo, ws.catalog, solver_opts(run));
        if (!base.schedule || base.status == sched::SolveStatus::Unknown) {
            r.exit_code = 2;
            r.err_text = std::string("baseline is ") + sched::to_string(base.status) +
                         (base.witness.empty() ? "" : " (" + base.witness + ")") +
                         "; scenario deltas are undefined\n";
            return r;
        }
        auto specs = scenario::enumerate_scenarios(g, ws.deployment.strategy);
        for (const auto& extra : ws.extra_scenarios) {
            for (const auto& s : specs)
                if (s.name == extra.name)
                    throw DiagnosticError("scenario '" + extra.name + "' clashes with a built-in scenario name");
            specs.push_back(extra);
        }
        std::vector<scenario::ScenarioResult> results;
        for (const auto& s : specs)
            results.push_back(scenario::evaluate_scenario(s, g, ws.topo, ws.catalog, solver_opts(run),
                                                          base.schedule->makespan, ws.deployment.risk));
        results = scenario::rank_scenarios(std::move(results));
        r.out_text = scenario::results_to_table(results);
        r.out_text += "baseline: " + scenario::group_digits(base.schedule->makespan) + " cycles, seed " +
                      std::to_string(run.seed) + "\n";
        r.files.emplace_back("scenarios.csv", scenario::results_to_csv(results));
        r.files.emplace_back("scenarios.txt", r.out_text);
        return r;
    });
}

CommandResult cmd_report(const std::string& results_dir) {
    return guarded([&] {
        if (!fs::is_directory(results_dir)) throw DiagnosticError("missing results directory: " + results_dir);
        std::vector<std::string> files;
        for (const auto& e : fs::recursive_directory_iterator(results_dir))
            if (e.is_regular_file() && e.path().extension() == ".csv" && e.path().filename() != "report.csv")
                files.push_back(e.path().string());
        std::sort(files.begin(), files.end());
        std::vector<std::vector<scenario::ScenarioResult>> sets;
        for (const auto& f : files) sets.push_back(scenario::results_from_csv(read_file(f), f));
        auto merged = scenario::merge_results(sets, files);
        CommandResult r;
        r.out_text = scenario::results_to_table(merged);
        r.files.emplace_back("report.csv", scenario::results_to_csv(merged));
        r.files.emplace_back("report.txt", r.out_text);
        return r;
    });
}

}  // namespace ddtwin::pipeline
