#pragma once

// Flow language frontend: lexer, parser, pretty-printer and validation.
//
//   Flow <name>
//     <param> : stream[DIM]...{type = in|out, label = x, key = value}
//   <internal> : stream[DIM]...
//   <callee>[i = 1:N, j = 1:M, formal = actual[i][j], ...]
//
// `%` starts a comment running to end of line. Newlines are insignificant
// inside brackets and braces. Indented declarations directly after the header
// are parameters; a declaration starting in column 1 (or one following an
// instantiation) is an internal stream.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "ddtwin/diagnostics.hpp"

namespace ddtwin::dsl {

enum class Direction { In, Out, Internal };

const char* to_string(Direction d);

// A dimension, bound or index: either a literal or a name resolved later
// (symbol for shapes/bounds, iterator variable for indices).
struct Expr {
    std::variant<std::int64_t, std::string> value;
    SourceLoc loc;

    [[nodiscard]] bool is_literal() const { return std::holds_alternative<std::int64_t>(value); }
    [[nodiscard]] std::int64_t literal() const { return std::get<std::int64_t>(value); }
    [[nodiscard]] const std::string& name() const { return std::get<std::string>(value); }

    friend bool operator==(const Expr&, const Expr&) = default;
};

struct StreamDecl {
    std::string name;
    std::vector<Expr> shape;
    Direction direction = Direction::Internal;
    std::vector<std::string> labels;
    // Attributes other than `type` and `label`, preserved verbatim.
    std::vector<std::pair<std::string, std::string>> attributes;
    SourceLoc loc;

    friend bool operator==(const StreamDecl&, const StreamDecl&) = default;
};

struct Iterator {
    std::string var;
    Expr lower;
    Expr upper;
    SourceLoc loc;

    friend bool operator==(const Iterator&, const Iterator&) = default;
};

struct StreamRef {
    std::string stream;
    std::vector<Expr> indices;
    SourceLoc loc;

    friend bool operator==(const StreamRef&, const StreamRef&) = default;
};

struct Binding {
    std::string formal;
    StreamRef actual;
    SourceLoc loc;

    friend bool operator==(const Binding&, const Binding&) = default;
};

struct Instantiation {
    std::string callee;
    std::vector<Iterator> iterators;
    std::vector<Binding> bindings;
    SourceLoc loc;

    friend bool operator==(const Instantiation&, const Instantiation&) = default;
};

struct FlowDef {
    std::string name;
    std::vector<StreamDecl> params;
    std::vector<StreamDecl> internals;
    std::vector<Instantiation> instantiations;
    SourceLoc loc;

    [[nodiscard]] const StreamDecl* find_stream(std::string_view stream) const;

    friend bool operator==(const FlowDef&, const FlowDef&) = default;
};

// Deployment-provided values for the symbolic constants used in shapes and
// iterator bounds.
class SymbolTable {
public:
    SymbolTable() = default;
    // Throws DiagnosticError when a value is not strictly positive.
    explicit SymbolTable(std::map<std::string, std::int64_t> entries);

    void set(const std::string& name, std::int64_t value);
    [[nodiscard]] std::optional<std::int64_t> lookup(std::string_view name) const;
    [[nodiscard]] const std::map<std::string, std::int64_t, std::less<>>& entries() const { return entries_; }

private:
    std::map<std::string, std::int64_t, std::less<>> entries_;
};

// Parses a complete source unit. Throws DiagnosticError with no partial result
// on any syntax error.
std::vector<FlowDef> parse_flow_source(std::string_view text, std::string_view file = "<input>");

// Canonical textual form; parse_flow_source(print_flows(x)) == x.
std::string print_flows(const std::vector<FlowDef>& defs);

// Resolves every name and evaluates every shape and bound. Throws
// DiagnosticError listing every problem found.
void validate_flows(const std::vector<FlowDef>& defs, const SymbolTable& symbols,
                    std::string_view file = "<input>");

struct LabeledStream {
    std::string flow;
    std::string stream;

    friend bool operator==(const LabeledStream&, const LabeledStream&) = default;
};

std::map<std::string, LabeledStream> collect_labels(const std::vector<FlowDef>& defs,
                                                    std::string_view file = "<input>");

// Evaluates a shape/bound expression against the symbol table.
std::optional<std::int64_t> evaluate(const Expr& e, const SymbolTable& symbols);

}  // namespace ddtwin::dsl
