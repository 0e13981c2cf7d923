#pragma once

// Index-based view of a graph against a topology and catalog, shared by the
// solver and the schedule checker.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ddtwin/scheduler.hpp"

namespace ddtwin::sched::detail {

constexpr int kNoCore = -1;      // pattern names no core
constexpr int kForeignCore = -2; // names a core the topology lacks

struct Model {
    const TaskGraph* graph = nullptr;
    const manifest::HardwareTopology* topo = nullptr;
    const manifest::PatternCatalog* catalog = nullptr;
    std::size_t nT = 0, nB = 0, nC = 0, nP = 0;

    std::vector<std::vector<int>> task_cores;   // allowed core indices, ascending
    std::vector<std::optional<Cycles>> lag;
    std::vector<std::vector<int>> buf_pats;     // catalog indices, in allowed order
    std::vector<std::vector<Cycles>> buf_dur;   // parallel to buf_pats
    std::vector<Cycles> buf_mindur;

    std::vector<manifest::PatternClass> pat_cls;
    std::vector<int> pat_core;
    std::vector<std::vector<char>> pat_obs_ok;  // non-pipeline observer compatibility per core
    std::vector<std::vector<char>> conflict;
    std::vector<int> pat_def_mem, pat_obs_mem;  // memory indices, -1 unknown
    std::vector<int> core_l3;                   // memory index of each core's L3
    bool residency_needed = false;

    [[nodiscard]] bool observer_ok(int pat, int def_core, int obs_core) const {
        if (pat_cls[pat] == manifest::PatternClass::Pipeline) return def_core == obs_core;
        return pat_obs_ok[pat][obs_core] != 0;
    }
    [[nodiscard]] bool definer_ok(int pat, int core) const {
        return pat_core[pat] == kNoCore || pat_core[pat] == core;
    }
    [[nodiscard]] Cycles duration(int pat, BufferId b) const;
    [[nodiscard]] Cycles effective_deadline() const { return graph->deadline > 0 ? graph->deadline : -1; }
};

// Throws DiagnosticError on unknown cores, unresolvable or unclassifiable patterns.
Model build_model(const TaskGraph& g, const manifest::HardwareTopology& topo, const manifest::PatternCatalog& catalog);

struct Occupancy {
    std::vector<int> task_core;
    std::vector<Cycles> task_start, task_finish;
    std::vector<int> buf_pat;       // -1: no transfer
    std::vector<Cycles> buf_start, buf_end;
};

// First capacity breach as (memory id, cycle, load).
struct Overflow {
    std::string memory;
    Cycles at = 0;
    Bytes load = 0;
    Bytes capacity = 0;
};
std::optional<Overflow> find_overflow(const Model& m, const Occupancy& occ);

// Label/slot/makespan/assignment values; labels take their buffers' latest completion.
std::map<std::string, std::int64_t> derive_symbols(const TaskGraph& g, const Occupancy& occ, Cycles makespan);

// Name of the first bound constraint that evaluates false (or cannot be evaluated).
std::optional<std::string> failing_constraint(const TaskGraph& g, const std::map<std::string, std::int64_t>& symbols);

}  // namespace ddtwin::sched::detail
