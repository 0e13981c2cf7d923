#include "doctest.h"
#include "instances.hpp"
#include "ddtwin/scenario.hpp"

using namespace ddtwin;
using scenario::Outcome;
using scenario::Risk;
using scenario::ScenarioResult;

namespace {

ScenarioResult row(const std::string& name, Cycles latency, Cycles base) {
    ScenarioResult r;
    r.name = name;
    r.latency = latency;
    r.baseline = base;
    r.delta_pct = scenario::delta_pct(base, latency);
    r.risk = scenario::classify(r.delta_pct, Outcome::Feasible, {});
    r.recommended = !(r.risk == Risk::Low && r.delta_pct && *r.delta_pct < 5);
    return r;
}

ScenarioResult infeasible(const std::string& name, Cycles base) {
    ScenarioResult r;
    r.name = name;
    r.outcome = Outcome::Infeasible;
    r.baseline = base;
    r.risk = Risk::CertainFailure;
    return r;
}

}  // namespace

TEST_CASE("table deltas") {
    const Cycles base = 207'800;
    CHECK(scenario::delta_pct(base, base) == 0);
    CHECK(scenario::delta_pct(base, 239'400) == 15);
    CHECK(scenario::delta_pct(base, 420'000) == 102);
    CHECK(scenario::delta_pct(base, 464'600) == 124);
    CHECK(scenario::delta_pct(base, 578'000) == 178);
    // 120.6
    CHECK(scenario::delta_pct(base, 458'400) == 121);
    CHECK(scenario::delta_pct(200, 201) == 1);  // 0.5 rounds up
}

TEST_CASE("risk classes") {
    manifest::RiskThresholds t;
    CHECK(scenario::classify(14, Outcome::Feasible, t) == Risk::Low);
    CHECK(scenario::classify(15, Outcome::Feasible, t) == Risk::Moderate);
    CHECK(scenario::classify(50, Outcome::Feasible, t) == Risk::High);
    CHECK(scenario::classify(std::nullopt, Outcome::Infeasible, t) == Risk::CertainFailure);
    CHECK(scenario::classify(std::nullopt, Outcome::Unknown, t) == Risk::Unknown);
}

TEST_CASE("ranking puts failures first") {
    auto ranked = scenario::rank_scenarios({row("a", 110, 100), infeasible("z", 100), row("b", 190, 100)});
    REQUIRE(ranked.size() == 3);
    CHECK(ranked[0].name == "z");
    CHECK(ranked[1].name == "b");
    CHECK(ranked[2].name == "a");
}

TEST_CASE("csv round trip") {
    std::vector<ScenarioResult> rs{infeasible("pin:c_0", 1000), row("small-evict", 1150, 1000), row("x", 1000, 1000)};
    auto text = scenario::results_to_csv(rs);
    auto back = scenario::results_from_csv(text);
    REQUIRE(back.size() == rs.size());
    for (std::size_t i = 0; i < rs.size(); ++i) CHECK(back[i] == rs[i]);
    CHECK(scenario::results_to_csv(back) == text);
}

TEST_CASE("empty scenario list gives a header only") {
    auto text = scenario::results_to_csv({});
    CHECK(text == "strategy,latency_cycles,delta_pct,risk\n");
    CHECK(scenario::results_from_csv(text).empty());
    CHECK_THROWS_AS(scenario::results_from_csv("name,lat\n"), DiagnosticError);
}

TEST_CASE("merge is a union and idempotent") {
    std::vector<ScenarioResult> a{row("s1", 120, 100)};
    std::vector<ScenarioResult> b{row("s2", 150, 100), row("s1", 120, 100)};
    auto m = scenario::merge_results({a, b});
    CHECK(m.size() == 2);
    auto again = scenario::merge_results({m, m});
    CHECK(again == m);
}

TEST_CASE("conflicting rows name the scenario") {
    std::vector<ScenarioResult> a{row("s1", 120, 100)};
    std::vector<ScenarioResult> b{row("s1", 130, 100)};
    try {
        scenario::merge_results({a, b}, {"one.csv", "two.csv"});
        FAIL("expected a conflict");
    } catch (const DiagnosticError& e) {
        std::string what = e.what();
        CHECK(what.find("s1") != std::string::npos);
        CHECK(what.find("two.csv") != std::string::npos);
    }
}

TEST_CASE("injections only narrow") {
    auto in = testkit::random_instance(3);
    scenario::ScenarioSpec spec{"evict", {}, "no-constraints"};
    scenario::Injection ev;
    ev.kind = scenario::InjectionKind::EvictBuffer;
    ev.target = scenario::Selector::parse("all");
    spec.injections.push_back(ev);
    bool any_big = false;
    for (const auto& b : in.graph.buffers)
        for (const auto& p : b.allowed_patterns)
            any_big = any_big || manifest::classify_pattern(p)->cls == manifest::PatternClass::BigDelay;
    if (!any_big) return;
    try {
        auto g = scenario::apply_injections(in.graph, spec);
        for (std::size_t b = 0; b < g.buffers.size(); ++b) {
            for (const auto& p : g.buffers[b].allowed_patterns) {
                CHECK(manifest::classify_pattern(p)->cls == manifest::PatternClass::BigDelay);
                const auto& was = in.graph.buffers[b].allowed_patterns;
                CHECK(std::find(was.begin(), was.end(), p) != was.end());
            }
        }
    } catch (const DiagnosticError&) {
        // a buffer with no big_delay option; the error is the contract
    }
}

TEST_CASE("add flow clones a group") {
    auto in = testkit::random_instance(5);
    for (auto& t : in.graph.tasks) t.group = "top";
    scenario::ScenarioSpec spec{"add", {}, "no-constraints"};
    scenario::Injection add;
    add.kind = scenario::InjectionKind::AddFlow;
    add.target = scenario::Selector::parse("group:top");
    add.copies = 2;
    spec.injections.push_back(add);
    auto g = scenario::apply_injections(in.graph, spec);
    CHECK(g.tasks.size() == 3 * in.graph.tasks.size());
    CHECK(g.find_task(in.graph.tasks[0].id + "+1"));
    CHECK(g.find_task(in.graph.tasks[0].id + "+2"));
}

TEST_CASE("scenario documents") {
    auto specs = scenario::parse_scenario_specs(R"(kind: scenario
name: pin-all
spec:
  injections:
    - kind: PIN_TASKS
      target: all
      cores: [c_0]
---
kind: scenario
name: lag
spec:
  injections:
    - kind: START_LAG
      value: 100
)");
    REQUIRE(specs.size() == 2);
    CHECK(specs[0].injections[0].kind == scenario::InjectionKind::PinTasks);
    CHECK(specs[1].injections[0].value == 100);
    CHECK_THROWS_AS(scenario::parse_scenario_specs("kind: scenario\nname: x\nspec:\n  injections:\n    - kind: START_LAG\n"),
                    DiagnosticError);
}

TEST_CASE("identity scenario reproduces the baseline") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto in = testkit::random_instance(seed);
        auto base = sched::solve_best_case(in.graph, in.topo, in.catalog);
        if (!base.has_schedule()) continue;
        auto r = scenario::evaluate_scenario({"id", {}, "no-constraints"}, in.graph, in.topo, in.catalog, {},
                                             base.schedule->makespan);
        CHECK(r.outcome == Outcome::Feasible);
        CHECK(r.latency == base.schedule->makespan);
        CHECK(r.delta_pct == 0);
    }
}
