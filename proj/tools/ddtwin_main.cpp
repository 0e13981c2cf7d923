#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "ddtwin/pipeline.hpp"

using namespace ddtwin;

namespace {

struct Flags {
    std::string manifest;
    std::string out;
    std::optional<std::int64_t> seed;
    std::string mode;
    std::string results;
    int verbose = 0;
};

int emit(const pipeline::CommandResult& r, const std::string& out_dir, int verbose) {
    std::cerr << r.err_text;
    try {
        for (const auto& [name, content] : r.files) {
            auto path = (std::filesystem::path(out_dir) / name).string();
            pipeline::write_atomic(path, content);
            if (verbose) std::cerr << "wrote " << path << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
    std::cout << r.out_text;
    return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ddtwin: digital twin scheduler for dataflow RAN pipelines"};
    app.require_subcommand(1);
    Flags f;
    auto add_common = [&](CLI::App* sub, bool manifest_required) {
        auto* m = sub->add_option("--manifest", f.manifest, "run manifest (YAML)");
        if (manifest_required) m->required();
        sub->add_option("--out", f.out, "output directory (overrides the manifest)");
        sub->add_option("--seed", f.seed, "seed recorded in summaries and used by instance generators");
        sub->add_option("--mode", f.mode, "solver mode")->check(CLI::IsMember({"exact", "heuristic"}));
        sub->add_flag("-v,--verbose", f.verbose, "more output on stderr");
    };
    auto* validate = app.add_subcommand("validate", "parse everything and run static checks");
    auto* elaborate = app.add_subcommand("elaborate", "write the elaborated task graph");
    auto* solve = app.add_subcommand("solve", "best-case schedule and summary");
    auto* scenarios = app.add_subcommand("scenarios", "evaluate and rank directed test scenarios");
    auto* report = app.add_subcommand("report", "merge scenario CSVs from a results directory");
    for (auto* s : {validate, elaborate, solve, scenarios}) add_common(s, true);
    add_common(report, false);
    report->add_option("results", f.results, "results directory (defaults to the manifest's out)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        pipeline::RunManifest run;
        if (!f.manifest.empty()) {
            auto r = pipeline::guarded_load(f.manifest, run);
            if (r.exit_code != 0) return emit(r, ".", f.verbose);
        }
        if (!f.out.empty()) run.out = f.out;
        if (f.seed) run.seed = *f.seed;
        if (f.mode == "exact") run.solver.mode = sched::SolveMode::Exact;
        if (f.mode == "heuristic") run.solver.mode = sched::SolveMode::Heuristic;

        if (*report) {
            std::string dir = !f.results.empty() ? f.results : run.out;
            if (dir.empty()) {
                std::cerr << "error: report needs a results directory or --manifest\n";
                return 1;
            }
            return emit(pipeline::cmd_report(dir), f.out.empty() ? dir : f.out, f.verbose);
        }
        pipeline::CommandResult r;
        if (*validate) r = pipeline::cmd_validate(run);
        else if (*elaborate) r = pipeline::cmd_elaborate(run);
        else if (*solve) r = pipeline::cmd_solve(run);
        else r = pipeline::cmd_scenarios(run);
        return emit(r, run.out, f.verbose);
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
}
