// One PASS/FAIL line per acceptance criterion. Exit status is the number of failures.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "ddtwin/dsl.hpp"
#include "ddtwin/manifest.hpp"
#include "ddtwin/pipeline.hpp"
#include "ddtwin/scenario.hpp"
#include "ddtwin/scheduler.hpp"
#include "instances.hpp"
#include "taxonomy.hpp"

using namespace ddtwin;

namespace {

std::string data(const std::string& rel) { return std::string(DDTWIN_DATA) + "/" + rel; }

struct Verdict {
    bool ok = false;
    std::string detail;
};

int failures = 0;

void report(const char* name, double limit_s, const std::function<Verdict()>& body) {
    auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
        v = body();
    } catch (const std::exception& e) {
        v = {false, std::string("exception: ") + e.what()};
    }
    double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool ok = v.ok && s < limit_s;
    if (v.ok && !ok) v.detail += " (too slow)";
    if (!ok) ++failures;
    std::printf("%s %-20s %8.2fs  %s\n", ok ? "PASS" : "FAIL", name, s, v.detail.c_str());
    std::fflush(stdout);
}

sched::SolveOptions exact() {
    sched::SolveOptions o;
    o.explain = false;
    return o;
}

Verdict fixtures() {
    auto flows = dsl::parse_flow_source(pipeline::read_file(data("srs/srs_flow.rdsl")), "srs_flow.rdsl");
    auto cons = manifest::parse_constraint_stream(pipeline::read_file(data("srs/timing.yaml")));
    auto cat = manifest::parse_pattern_catalog(pipeline::read_file(data("srs/pattern_fragment.xml")), "pattern_fragment.xml",
                                               manifest::ReferenceCheck::Structural);
    auto meta = manifest::parse_constraint_stream(pipeline::read_file(data("srs/pdsch_sym.yaml")));
    std::ostringstream os;
    os << flows.size() << " flow, " << cons.size() << " timing docs, " << cat.size() << " pattern, " << meta.size()
       << " metadata doc";
    return {!flows.empty() && !cons.empty() && cat.size() == 1 && meta.size() == 1, os.str()};
}

Verdict oracle() {
    int feasible = 0, bad = 0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        auto in = testkit::random_instance(seed);
        auto want = sched::brute_force_oracle(in.graph, in.topo, in.catalog);
        auto got = sched::solve_best_case(in.graph, in.topo, in.catalog, exact());
        bool same = want ? got.status == sched::SolveStatus::Optimal && got.schedule->makespan == *want
                         : got.status == sched::SolveStatus::Infeasible;
        if (!same) {
            ++bad;
            std::fprintf(stderr, "oracle mismatch, seed %llu\n", (unsigned long long)seed);
        }
        feasible += want.has_value();
    }
    std::ostringstream os;
    os << "50 instances, " << feasible << " feasible, " << bad << " mismatches";
    return {bad == 0, os.str()};
}

Verdict monotonicity() {
    int bad = 0, base_infeasible = 0, infeasible_pairs = 0;
    testkit::GenParams loose;
    loose.constraints = false;  // C itself unconstrained, tighten() supplies the difference
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        auto in = testkit::random_instance(seed + 1000, loose);
        auto a = sched::solve_best_case(in.graph, in.topo, in.catalog, exact());
        auto tight = testkit::tighten(in, seed, a.has_schedule() ? a.schedule->makespan : 0);
        auto b = sched::solve_best_case(tight, in.topo, in.catalog, exact());
        bool ok = a.status != sched::SolveStatus::Unknown && b.status != sched::SolveStatus::Unknown;
        if (ok && !a.has_schedule()) ok = !b.has_schedule();
        if (ok && a.has_schedule() && b.has_schedule()) ok = b.schedule->makespan >= a.schedule->makespan;
        base_infeasible += !a.has_schedule();
        infeasible_pairs += !b.has_schedule();
        if (!ok) {
            ++bad;
            std::fprintf(stderr, "monotonicity broken, seed %llu\n", (unsigned long long)seed);
        }
    }
    std::ostringstream os;
    os << "200 pairs, infeasible " << base_infeasible << " base / " << infeasible_pairs << " tightened, " << bad << " violations";
    return {bad == 0, os.str()};
}

Verdict table_deltas() {
    const Cycles base = 207800;
    const Cycles lat[] = {239400, 420000, 464600, 578000, 458400};
    const int want[] = {15, 102, 124, 178, 120};
    bool ok = scenario::delta_pct(base, base) == 0;
    std::ostringstream os;
    for (int i = 0; i < 5; ++i) {
        int d = scenario::delta_pct(base, lat[i]);
        ok = ok && std::abs(d - want[i]) <= 1;
        os << (i ? " " : "") << d;
    }
    return {ok, "deltas " + os.str()};
}

std::string du_csv;

Verdict du_analog() {
    auto run = pipeline::load_run_manifest(data("du_downlink/run.yaml"));
    auto r = pipeline::cmd_scenarios(run);
    if (r.exit_code != 0) return {false, "exit " + std::to_string(r.exit_code) + ": " + r.err_text};
    for (const auto& [name, content] : r.files)
        if (name == "scenarios.csv") du_csv = content;
    auto rows = scenario::results_from_csv(du_csv);
    std::map<std::string, scenario::ScenarioResult> by;
    for (const auto& x : rows) by[x.name] = x;
    for (const char* n : {"no-constraints", "small-evict", "evict:DL_CONFIG", "large-evict", "small+large-evict", "add-flow:+1"})
        if (!by.count(n) || by[n].outcome != scenario::Outcome::Feasible) return {false, std::string("missing or infeasible: ") + n};
    auto lat = [&](const char* n) { return by[n].latency; };
    Cycles base = lat("no-constraints");
    bool near = base >= 150000 && base <= 250000;
    bool order = base < lat("small-evict") && lat("small-evict") < lat("evict:DL_CONFIG") &&
                 lat("evict:DL_CONFIG") < lat("large-evict") && lat("large-evict") < lat("small+large-evict");
    bool add = lat("small-evict") < lat("add-flow:+1") && lat("add-flow:+1") < lat("small+large-evict");
    bool risk = by["small-evict"].risk == scenario::Risk::Moderate && by["evict:DL_CONFIG"].risk == scenario::Risk::High;
    std::ostringstream os;
    os << "baseline " << base << ", small +" << *by["small-evict"].delta_pct << " cfg +"
       << *by["evict:DL_CONFIG"].delta_pct << " large +" << *by["large-evict"].delta_pct << " both +"
       << *by["small+large-evict"].delta_pct << " add +" << *by["add-flow:+1"].delta_pct;
    if (!near) os << " [baseline off]";
    if (!order) os << " [order]";
    if (!add) os << " [add-flow]";
    if (!risk) os << " [risk]";
    return {near && order && add && risk, os.str()};
}

Verdict taxonomy() {
    std::map<sched::ViolationKind, bool> hit;
    for (auto k : {sched::ViolationKind::ReadBeforeWrite, sched::ViolationKind::BufferOverflow,
                   sched::ViolationKind::DeadlineMiss, sched::ViolationKind::CoreOverlap,
                   sched::ViolationKind::PatternViolation, sched::ViolationKind::LagViolation})
        hit[k] = false;
    int dirty = 0;
    for (const auto& c : testkit::taxonomy_cases()) {
        auto v = sched::check_schedule(c.schedule, c.instance.graph, c.instance.topo, c.instance.catalog);
        for (const auto& x : v)
            if (x.kind == c.expect) hit[c.expect] = true;
        auto s = sched::solve_best_case(c.instance.graph, c.instance.topo, c.instance.catalog, exact());
        if (s.has_schedule() &&
            !sched::check_schedule(*s.schedule, c.instance.graph, c.instance.topo, c.instance.catalog).empty())
            ++dirty;
    }
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        auto in = testkit::random_instance(seed);
        auto s = sched::solve_best_case(in.graph, in.topo, in.catalog, exact());
        if (s.has_schedule() && !sched::check_schedule(*s.schedule, in.graph, in.topo, in.catalog).empty()) ++dirty;
    }
    std::string missing;
    for (auto [k, h] : hit)
        if (!h) missing += std::string(" ") + sched::to_string(k);
    std::ostringstream os;
    os << (missing.empty() ? "all six kinds raised" : "not raised:" + missing) << ", " << dirty
       << " solver schedules with violations";
    return {missing.empty() && dirty == 0, os.str()};
}

Verdict determinism() {
    auto run = pipeline::load_run_manifest(data("du_downlink/run.yaml"));
    auto r = pipeline::cmd_scenarios(run);
    std::string again;
    for (const auto& [name, content] : r.files)
        if (name == "scenarios.csv") again = content;
    if (du_csv.empty()) return {false, "no first run"};
    return {again == du_csv, again == du_csv ? "identical CSV, seed " + std::to_string(run.seed) : "CSV differs"};
}

}  // namespace

int main() {
    report("fixture-fidelity", 1, fixtures);
    report("oracle-equivalence", 60, oracle);
    report("monotonicity", 120, monotonicity);
    report("table-deltas", 1, table_deltas);
    report("du-analog", 300, du_analog);
    report("error-taxonomy", 60, taxonomy);
    report("determinism", 300, determinism);
    return failures;
}
