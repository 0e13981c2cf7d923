#pragma once

// Typed models for the YAML constraint manifests, the XML pattern catalog and
// the topology/deployment configuration, plus the transfer cost model.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ddtwin/diagnostics.hpp"

namespace ddtwin::manifest {

inline constexpr std::string_view kApiVersion = "rdsl/v0";

enum class RelOp { Lt, Le, Eq, Ge, Gt };
const char* to_string(RelOp op);
bool compare(std::int64_t lhs, RelOp op, std::int64_t rhs);

// `value <op>` as written in a timing equality document.
enum class EqualityOp { Equal, Le, Ge };
const char* to_string(EqualityOp op);

struct TimingEqualityDoc {
    std::string name;
    std::string variable_name;
    EqualityOp op = EqualityOp::Equal;
    std::int64_t value = 0;
    std::string unit = "clock";

    friend bool operator==(const TimingEqualityDoc&, const TimingEqualityDoc&) = default;
};

// Sum of coefficient*placeholder products plus a constant.
struct LinearTerm {
    std::vector<std::pair<std::string, std::int64_t>> products;
    std::int64_t constant = 0;

    friend bool operator==(const LinearTerm&, const LinearTerm&) = default;
};

// `terms[0] ops[0] terms[1] ops[1] ... terms[n]`
struct Equation {
    std::vector<LinearTerm> terms;
    std::vector<RelOp> ops;

    friend bool operator==(const Equation&, const Equation&) = default;
};

Equation parse_equation(std::string_view text);
std::string to_string(const Equation& eq);

struct TimingEquationDoc {
    std::string name;
    std::string equation_text;
    Equation equation;
    std::map<std::string, std::string> bindings;  // placeholder -> symbol
    std::string unit = "clock";

    friend bool operator==(const TimingEquationDoc&, const TimingEquationDoc&) = default;
};

struct FunctionMetadata {
    std::string name;
    std::vector<std::string> available_patterns;
    Bytes elementsize = 0;
    Bytes internalsize = 0;
    Cycles runtime = 0;

    friend bool operator==(const FunctionMetadata&, const FunctionMetadata&) = default;
};

using ConstraintDoc = std::variant<TimingEqualityDoc, TimingEquationDoc, FunctionMetadata>;

std::vector<ConstraintDoc> parse_constraint_stream(std::string_view text, std::string_view file = "<input>");

// Chained comparison, left to right, exact integer arithmetic. Throws
// DiagnosticError naming the first bound symbol missing from `assignment`.
bool evaluate_timing_equation(const TimingEquationDoc& doc, const std::map<std::string, std::int64_t>& assignment);

// ---------------------------------------------------------------- hardware

enum class MemoryLevel { L2, L3, DDR };
const char* to_string(MemoryLevel level);

struct Memory {
    std::string id;
    MemoryLevel level = MemoryLevel::L3;
    Bytes capacity = 0;
    Bytes bandwidth = 0;  // bytes per cycle
    Cycles latency = 0;
};

struct Core {
    std::string id;
    std::string l2;
    std::string l3;
};

enum class PatternClass { Pipeline, L2toL2, BigDelay };
const char* to_string(PatternClass c);

struct ClassCost {
    Cycles base = 0;
    std::optional<Bytes> bandwidth;  // bytes/cycle; absent means no size term
};

struct HardwareTopology {
    std::vector<Memory> memories;
    std::vector<Core> cores;
    std::int64_t clock_hz = 2'000'000'000;
    std::map<PatternClass, ClassCost> pattern_costs = default_costs();

    [[nodiscard]] const Memory* find_memory(std::string_view id) const;
    [[nodiscard]] std::optional<std::size_t> core_index(std::string_view id) const;
    [[nodiscard]] Bytes max_capacity() const;

    // pipeline: base 0, no size term; L2toL2: 200 + size/64; big_delay: 1000 + size/16.
    static std::map<PatternClass, ClassCost> default_costs();
};

HardwareTopology parse_topology(std::string_view yaml_text, std::string_view file = "<input>");

// Name comparison is insensitive to `.`/`_` separators, case and the split of
// trailing indices: `big_delay.c.0.L3.0` and `big_delay.c_0.L3_0` agree.
std::string canonical_name(std::string_view name);

enum class SharedLevel { L2 = 0, L3 = 1 };
enum class SidePair { II = 0, IO = 1, OI = 2, OO = 3 };
constexpr std::size_t share_slot(SharedLevel l, SidePair s) {
    return static_cast<std::size_t>(l) * 4 + static_cast<std::size_t>(s);
}
std::string share_element_name(std::size_t slot);  // "shares_L2_II_with"

struct Pattern {
    std::string name;
    std::string defining_memory;
    std::string observing_memory;
    std::vector<std::string> exclusive_define_with;
    std::array<std::vector<std::string>, 8> shares;
    std::vector<std::string> can_observe;

    [[nodiscard]] const std::vector<std::string>& shares_with(SharedLevel l, SidePair s) const {
        return shares[share_slot(l, s)];
    }
};

class PatternCatalog {
public:
    PatternCatalog() = default;
    explicit PatternCatalog(std::vector<Pattern> patterns);

    [[nodiscard]] const std::vector<Pattern>& patterns() const { return patterns_; }
    [[nodiscard]] std::size_t size() const { return patterns_.size(); }
    [[nodiscard]] bool empty() const { return patterns_.empty(); }
    [[nodiscard]] std::optional<std::size_t> index_of(std::string_view name) const;
    [[nodiscard]] const Pattern* find(std::string_view name) const;

    // Every member reference resolves; throws DiagnosticError otherwise.
    void check_references(std::string_view file = "<input>") const;
    // Anchor memories exist in the topology.
    void check_against(const HardwareTopology& topo, std::string_view file = "<input>") const;

private:
    std::vector<Pattern> patterns_;
    std::map<std::string, std::size_t> by_canonical_;
};

enum class ReferenceCheck { Resolve, Structural };

// With ReferenceCheck::Resolve (default) every member name must resolve
// within the catalog. An element whose only content is `...` is an elided
// set and parses as empty.
PatternCatalog parse_pattern_catalog(std::string_view xml_text, std::string_view file = "<input>",
                                     ReferenceCheck check = ReferenceCheck::Resolve);
std::string write_pattern_catalog(const PatternCatalog& catalog);

PatternCatalog generate_patterns_from_topology(const HardwareTopology& topo);

// Class and defining-core token read from a pattern name.
struct PatternTraits {
    PatternClass cls = PatternClass::Pipeline;
    std::optional<std::string> core;  // canonical core token, e.g. "c#0"
};
std::optional<PatternTraits> classify_pattern(std::string_view name);

// base_latency(class) + ceil(size / bandwidth(class)).
Cycles transfer_cost(const Pattern& p, Bytes size, const HardwareTopology& topo);
Cycles transfer_cost(PatternClass cls, Bytes size, const HardwareTopology& topo);

// ---------------------------------------------------------------- deployment

struct ScenarioStrategy {
    Bytes size_threshold = 10'000;
    std::vector<Cycles> start_lag_sweep;
    std::optional<std::string> add_flow_target;
    int add_flow_copies = 1;
};

struct RiskThresholds {
    int high_pct = 50;
    int moderate_pct = 15;
    int recommend_floor_pct = 5;
};

struct DeploymentConfig {
    std::map<std::string, std::int64_t> symbols;
    Cycles slot_budget = 0;
    std::optional<Cycles> max_start_lag;
    std::string entry_flow;
    std::string slot_symbol = "modem_period";
    std::vector<std::string> metadata_files;
    std::map<std::string, std::int64_t> assignments;
    ScenarioStrategy strategy;
    RiskThresholds risk;
};

DeploymentConfig parse_deployment(std::string_view yaml_text, std::string_view file = "<input>");

}  // namespace ddtwin::manifest
