#include <algorithm>

#include "doctest.h"
#include "instances.hpp"
#include "taxonomy.hpp"

using namespace ddtwin;
using testkit::Instance;

namespace {

// tasks given as {name, runtime, inputs by task index}; every output is 640 bytes
Instance build(const std::vector<std::tuple<std::string, Cycles, std::vector<int>>>& spec, int cores = 2) {
    Instance in;
    in.topo = testkit::small_topology(cores);
    in.catalog = manifest::generate_patterns_from_topology(in.topo);
    std::vector<std::string> all;
    for (const auto& p : in.catalog.patterns()) all.push_back(p.name);
    auto& g = in.graph;
    elab::Buffer ext;
    ext.id = "ext";
    ext.external = true;
    g.buffers.push_back(ext);
    for (std::size_t t = 0; t < spec.size(); ++t) {
        const auto& [name, rt, ins] = spec[t];
        elab::Buffer out;
        out.id = name + ".out";
        out.size = 640;
        out.definer = t;
        out.allowed_patterns = all;
        g.buffers.push_back(out);
        elab::TaskInstance task;
        task.id = name;
        task.function = name;
        task.runtime = rt;
        task.outputs = {t + 1};
        if (ins.empty()) task.inputs = {0};
        for (int i : ins) task.inputs.push_back(static_cast<std::size_t>(i) + 1);
        g.tasks.push_back(task);
    }
    g.deadline = 1'000'000;
    g.rebuild_observers();
    return in;
}

sched::SolveOutcome solve(const Instance& in) { return sched::solve_best_case(in.graph, in.topo, in.catalog); }

}  // namespace

TEST_CASE("single task") {
    auto in = build({{"t", 7200, {}}});
    auto r = solve(in);
    REQUIRE(r.status == sched::SolveStatus::Optimal);
    CHECK(r.schedule->makespan == 7200);
}

TEST_CASE("chain stays on one core") {
    auto in = build({{"a", 100, {}}, {"b", 100, {0}}, {"c", 50, {1}}});
    auto r = solve(in);
    REQUIRE(r.status == sched::SolveStatus::Optimal);
    CHECK(r.schedule->makespan == 250);
    CHECK(r.schedule->tasks[0].core == r.schedule->tasks[2].core);
}

TEST_CASE("diamond splits across cores") {
    auto in = build({{"a", 100, {}}, {"b", 100, {0}}, {"c", 100, {0}}, {"d", 100, {1, 2}}});
    auto r = solve(in);
    REQUIRE(r.status == sched::SolveStatus::Optimal);
    auto oracle = sched::brute_force_oracle(in.graph, in.topo, in.catalog, sched::OracleLimits{8, 2, 8});
    REQUIRE(oracle);
    CHECK(r.schedule->makespan == *oracle);
    // a 30-cycle L2 copy on each side beats running everything in sequence
    CHECK(r.schedule->makespan == 360);
    CHECK(r.schedule->tasks[1].core != r.schedule->tasks[2].core);
    CHECK(sched::check_schedule(*r.schedule, in.graph, in.topo, in.catalog).empty());
}

TEST_CASE("independent tasks fill both cores") {
    auto in = build({{"a", 100, {}}, {"b", 100, {}}, {"c", 100, {}}, {"d", 100, {}}});
    auto r = solve(in);
    CHECK(r.schedule->makespan == 200);
}

TEST_CASE("deadline below the best case names DEADLINE") {
    auto in = build({{"a", 100, {}}, {"b", 100, {0}}});
    in.graph.deadline = 150;
    auto r = solve(in);
    CHECK(r.status == sched::SolveStatus::Infeasible);
    CHECK(r.witness == "DEADLINE");
    CHECK_FALSE(r.has_schedule());
}

TEST_CASE("lag that cannot be met names LAG") {
    auto in = build({{"a", 100, {}}, {"b", 100, {}}, {"c", 100, {}}});
    in.graph.tasks[0].allowed_cores = {"c_0"};
    in.graph.tasks[1].allowed_cores = {"c_0"};
    in.graph.tasks[2].allowed_cores = {"c_0"};
    in.graph.max_start_lag = 50;
    auto r = solve(in);
    CHECK(r.status == sched::SolveStatus::Infeasible);
    CHECK(r.witness == "LAG");
}

TEST_CASE("heuristic mode is labelled and deterministic") {
    auto in = testkit::random_instance(7);
    sched::SolveOptions o;
    o.mode = sched::SolveMode::Heuristic;
    o.node_limit = 3000;
    o.seed = 11;
    auto a = sched::solve_best_case(in.graph, in.topo, in.catalog, o);
    auto b = sched::solve_best_case(in.graph, in.topo, in.catalog, o);
    REQUIRE(a.has_schedule() == b.has_schedule());
    if (a.has_schedule()) {
        CHECK(sched::schedule_to_json(a, in.graph) == sched::schedule_to_json(b, in.graph));
        CHECK(a.status != sched::SolveStatus::Unknown);
    }
}

TEST_CASE("hand-built schedules hit each violation kind") {
    {
        auto in = testkit::taxonomy_base();
        CHECK(sched::check_schedule(testkit::taxonomy_valid(in), in.graph, in.topo, in.catalog).empty());
    }
    for (const auto& c : testkit::taxonomy_cases()) {
        CAPTURE(c.name);
        auto v = sched::check_schedule(c.schedule, c.instance.graph, c.instance.topo, c.instance.catalog);
        bool hit = std::any_of(v.begin(), v.end(), [&](const sched::Violation& x) { return x.kind == c.expect; });
        CHECK(hit);
        auto solved = solve(c.instance);
        if (solved.has_schedule())
            CHECK(sched::check_schedule(*solved.schedule, c.instance.graph, c.instance.topo, c.instance.catalog).empty());
    }
}

TEST_CASE("schedule json round trip") {
    auto in = build({{"a", 100, {}}, {"b", 100, {0}}, {"c", 100, {0}}, {"d", 100, {1, 2}}});
    auto r = solve(in);
    auto text = sched::schedule_to_json(r, in.graph);
    auto back = sched::schedule_from_json(text, in.graph);
    CHECK(back.makespan == r.schedule->makespan);
    CHECK(sched::check_schedule(back, in.graph, in.topo, in.catalog).empty());
}

TEST_CASE("tightening never helps") {
    for (std::uint64_t seed = 1; seed <= 60; ++seed) {
        CAPTURE(seed);
        auto in = testkit::random_instance(seed);
        auto tight = testkit::tighten(in, seed);
        sched::SolveOptions o;
        o.explain = false;
        auto a = sched::solve_best_case(in.graph, in.topo, in.catalog, o);
        auto b = sched::solve_best_case(tight, in.topo, in.catalog, o);
        if (!a.has_schedule()) {
            CHECK_FALSE(b.has_schedule());
            continue;
        }
        if (b.has_schedule()) CHECK(b.schedule->makespan >= a.schedule->makespan);
    }
}
