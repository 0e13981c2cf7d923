#pragma once

// Directed test scenarios: constraint injections on an elaborated graph,
// their evaluation against a baseline solve, ranking and CSV/text export.

#include <optional>
#include <string>
#include <vector>

#include "ddtwin/graph.hpp"
#include "ddtwin/manifest.hpp"
#include "ddtwin/scheduler.hpp"

namespace ddtwin::scenario {

using elab::TaskGraph;

enum class InjectionKind { EvictBuffer, PinTasks, StartLag, AddFlow, TightenDeadline };
const char* to_string(InjectionKind k);
InjectionKind injection_kind_from(std::string_view s);

// all | id:<x> | function:<f> | group:<g> | size_lt:<bytes> | size_ge:<bytes>
struct Selector {
    enum class Kind { All, Id, Function, Group, SizeLt, SizeGe };
    Kind kind = Kind::All;
    std::string text;
    Bytes size = 0;

    static Selector parse(std::string_view s);
    [[nodiscard]] std::string str() const;
};

struct Injection {
    InjectionKind kind = InjectionKind::EvictBuffer;
    Selector target;
    std::vector<std::string> cores;  // PIN_TASKS
    Cycles value = 0;                // START_LAG, TIGHTEN_DEADLINE
    int copies = 1;                  // ADD_FLOW

    // Canonical one-line form; equal strings mean equal injections.
    [[nodiscard]] std::string str() const;
};

struct ScenarioSpec {
    std::string name;
    std::vector<Injection> injections;
    std::string baseline_ref = "no-constraints";
};

// Monotone: only shrinks allowed sets or tightens bounds, except ADD_FLOW
// which clones the tasks of a top-level flow instance.
TaskGraph apply_injections(const TaskGraph& graph, const ScenarioSpec& spec);

enum class Outcome { Feasible, Infeasible, Unknown };
enum class Risk { CertainFailure, High, Moderate, Low, Unknown };
const char* to_string(Outcome o);
const char* to_string(Risk r);

struct ScenarioResult {
    std::string name;
    Outcome outcome = Outcome::Feasible;
    Cycles latency = 0;           // feasible only
    Cycles baseline = 0;
    std::optional<int> delta_pct; // feasible only
    Risk risk = Risk::Low;
    bool recommended = true;
    std::string witness;          // not exported to CSV, ignored by ==

    friend bool operator==(const ScenarioResult& a, const ScenarioResult& b) {
        return a.name == b.name && a.outcome == b.outcome && a.latency == b.latency && a.baseline == b.baseline &&
               a.delta_pct == b.delta_pct && a.risk == b.risk && a.recommended == b.recommended;
    }
};

// round-half-up((latency / baseline - 1) * 100) in exact integer arithmetic.
int delta_pct(Cycles baseline, Cycles latency);
Risk classify(std::optional<int> delta, Outcome outcome, const manifest::RiskThresholds& t);

// `baseline` must come from a feasible solve of the unconstrained graph.
ScenarioResult evaluate_scenario(const ScenarioSpec& spec, const TaskGraph& graph,
                                 const manifest::HardwareTopology& topo, const manifest::PatternCatalog& catalog,
                                 const sched::SolveOptions& opts, Cycles baseline,
                                 const manifest::RiskThresholds& risk = {});

std::vector<ScenarioSpec> enumerate_scenarios(const TaskGraph& graph, const manifest::ScenarioStrategy& strategy);

// CERTAIN_FAILURE first, then delta descending, ties by name; UNKNOWN last.
std::vector<ScenarioResult> rank_scenarios(std::vector<ScenarioResult> results);

std::vector<ScenarioSpec> parse_scenario_specs(std::string_view yaml_text, std::string_view file = "<input>");

std::string results_to_csv(const std::vector<ScenarioResult>& results);
std::vector<ScenarioResult> results_from_csv(std::string_view text, std::string_view file = "<input>",
                                             const manifest::RiskThresholds& risk = {});
std::string results_to_table(const std::vector<ScenarioResult>& results);

// Union keyed by name; conflicting rows or baselines are errors.
std::vector<ScenarioResult> merge_results(const std::vector<std::vector<ScenarioResult>>& sets,
                                          const std::vector<std::string>& origins = {});

// "207,800"
std::string group_digits(std::int64_t v);

}  // namespace ddtwin::scenario
