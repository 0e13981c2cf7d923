#pragma once

// Best-case schedule search over a TaskGraph, an exhaustive reference oracle
// for small instances and a checker for arbitrary (hand-written) schedules.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ddtwin/graph.hpp"
#include "ddtwin/manifest.hpp"

namespace ddtwin::sched {

using elab::BufferId;
using elab::TaskGraph;
using elab::TaskId;

struct TaskPlacement {
    std::string core;
    Cycles start = 0;
};

struct Transfer {
    std::string pattern;
    Cycles start = 0;
    Cycles duration = 0;
};

// Indexed like graph.tasks / graph.buffers. External buffers carry no transfer.
struct Schedule {
    std::vector<TaskPlacement> tasks;
    std::vector<std::optional<Transfer>> transfers;
    Cycles makespan = 0;
};

enum class SolveStatus { Optimal, Feasible, Infeasible, Unknown };
const char* to_string(SolveStatus s);

enum class SolveMode { Exact, Heuristic };

struct SolveOptions {
    SolveMode mode = SolveMode::Exact;
    std::int64_t node_limit = 5'000'000;
    std::optional<double> time_limit_s;
    std::uint64_t seed = 0;  // local search moves
    bool explain = true;  // run relaxed solves to name a witness on infeasibility
};

struct SolveStats {
    std::int64_t nodes = 0;
    std::int64_t memo_hits = 0;
    std::map<std::string, std::int64_t> rejections;  // LAG, PATTERN, RESIDENCY, ...
};

// Optimal: proven minimum. Feasible: heuristic mode, or an incumbent left when
// the budget ran out (status Unknown then). Infeasible names a witness:
// DEADLINE, LAG, PATTERN, RESIDENCY, CORE, BUFFER_DEADLINE:<buffer> or
// CONSTRAINT:<equation name>.
struct SolveOutcome {
    SolveStatus status = SolveStatus::Unknown;
    std::optional<Schedule> schedule;
    std::string witness;
    SolveStats stats;

    [[nodiscard]] bool has_schedule() const { return schedule.has_value(); }
};

SolveOutcome solve_best_case(const TaskGraph& graph, const manifest::HardwareTopology& topo,
                             const manifest::PatternCatalog& catalog, const SolveOptions& opts = {});

struct OracleLimits {
    std::size_t max_tasks = 8;
    std::size_t max_cores = 2;
    std::size_t max_patterns_per_buffer = 3;
};

// nullopt when infeasible. Throws DiagnosticError above the limits.
std::optional<Cycles> brute_force_oracle(const TaskGraph& graph, const manifest::HardwareTopology& topo,
                                         const manifest::PatternCatalog& catalog, const OracleLimits& limits = {});

enum class ViolationKind {
    ReadBeforeWrite,
    WriteBeforeRead,
    BufferOverflow,
    DeadlineMiss,
    CoreOverlap,
    PatternViolation,
    LagViolation,
    TransferConflict,
    CoreRestriction,
    ConstraintViolation,
};
const char* to_string(ViolationKind k);

struct Violation {
    ViolationKind kind;
    std::string subject;
    std::string message;
};

struct CheckOptions {
    // Treat the slot as periodic with period graph.deadline and report a
    // definition of slot n+1 landing before slot n's reads are done.
    bool wraparound = false;
};

std::vector<Violation> check_schedule(const Schedule& schedule, const TaskGraph& graph,
                                      const manifest::HardwareTopology& topo, const manifest::PatternCatalog& catalog,
                                      const CheckOptions& opts = {});

// ready(t) = max over inputs of transfer completion (release for externals).
std::vector<Cycles> compute_ready_times(const Schedule& schedule, const TaskGraph& graph);

// Symbol values derived from a schedule: labels, slot symbol, makespan, assignments.
std::map<std::string, std::int64_t> schedule_symbols(const Schedule& schedule, const TaskGraph& graph);

std::string schedule_to_json(const SolveOutcome& outcome, const TaskGraph& graph,
                             const std::vector<Violation>& violations = {});
Schedule schedule_from_json(std::string_view text, const TaskGraph& graph);

}  // namespace ddtwin::sched
