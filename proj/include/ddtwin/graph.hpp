#pragma once

// Flat task graph for one slot instance, produced by inlining every flow
// instantiation of the entry flow.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ddtwin/diagnostics.hpp"
#include "ddtwin/dsl.hpp"
#include "ddtwin/manifest.hpp"

namespace ddtwin::elab {

using TaskId = std::size_t;
using BufferId = std::size_t;

struct TaskInstance {
    std::string id;        // flow path + iterator values
    std::string function;  // leaf callee
    Cycles runtime = 0;
    Bytes internalsize = 0;
    std::vector<BufferId> inputs;
    std::vector<BufferId> outputs;
    std::vector<std::string> allowed_cores;  // empty: every core
    std::optional<Cycles> max_start_lag;     // overrides the graph-wide lag
    std::string group;                       // top-level instantiation this task belongs to
};

struct Buffer {
    std::string id;
    Bytes size = 0;
    std::optional<TaskId> definer;
    std::vector<TaskId> observers;
    std::vector<std::string> allowed_patterns;
    std::vector<std::string> labels;
    // Entry-flow inputs (and anything carried over from the previous slot) are
    // available at `release` and need no movement.
    bool external = false;
    Cycles release = 0;
    std::optional<Cycles> deadline;  // completion bound from a label relation
};

struct TaskGraph {
    std::vector<TaskInstance> tasks;
    std::vector<Buffer> buffers;
    Cycles deadline = 0;
    std::optional<Cycles> max_start_lag;
    std::vector<manifest::TimingEquationDoc> bound_constraints;
    std::map<std::string, std::int64_t> assignments;
    std::string slot_symbol = "modem_period";

    [[nodiscard]] std::optional<TaskId> find_task(std::string_view id) const;
    [[nodiscard]] std::optional<BufferId> find_buffer(std::string_view id) const;
    // Rebuilds every buffer's observer list from task inputs.
    void rebuild_observers();
    // Tasks in a deterministic topological order; nullopt when cyclic.
    [[nodiscard]] std::optional<std::vector<TaskId>> topological_order() const;
};

// Throws DiagnosticError for a missing leaf metadata, a cycle, a stream that
// is observed but never defined or one that is defined twice.
TaskGraph elaborate(const std::vector<dsl::FlowDef>& defs, const std::string& entry, const dsl::SymbolTable& symbols,
                    const std::vector<manifest::FunctionMetadata>& metadata, const manifest::PatternCatalog& catalog);

// Sets the deadline from slot-symbol equalities (or `default_deadline`),
// attaches label relations to buffers and keeps everything else as bound
// constraints checked by the solver.
TaskGraph bind_timing(TaskGraph graph, const std::vector<manifest::ConstraintDoc>& docs,
                      const std::map<std::string, dsl::LabeledStream>& labels, Cycles default_deadline);

enum class FindingKind { UndefinedObserved, UnreachableTask, GuaranteedOverflow, NoAllowedPattern };
const char* to_string(FindingKind k);

struct Finding {
    FindingKind kind;
    std::string subject;
    std::string message;
};

std::vector<Finding> check_static(const TaskGraph& graph, const manifest::HardwareTopology& topo);

std::string graph_to_json(const TaskGraph& graph);
TaskGraph graph_from_json(std::string_view text);

}  // namespace ddtwin::elab
