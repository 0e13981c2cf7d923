#include <set>

#include "ddtwin/graph.hpp"

namespace ddtwin::elab {

namespace {

manifest::TimingEquationDoc as_equation(const manifest::TimingEqualityDoc& d) {
    manifest::TimingEquationDoc eq;
    eq.name = d.name;
    manifest::LinearTerm lhs;
    lhs.products.emplace_back("V", 1);
    manifest::LinearTerm rhs;
    rhs.constant = d.value;
    eq.equation.terms = {lhs, rhs};
    switch (d.op) {
        case manifest::EqualityOp::Equal: eq.equation.ops = {manifest::RelOp::Eq}; break;
        case manifest::EqualityOp::Le: eq.equation.ops = {manifest::RelOp::Le}; break;
        case manifest::EqualityOp::Ge: eq.equation.ops = {manifest::RelOp::Ge}; break;
    }
    eq.equation_text = manifest::to_string(eq.equation);
    eq.bindings["V"] = d.variable_name;
    eq.unit = d.unit;
    return eq;
}

}  // namespace

TaskGraph bind_timing(TaskGraph graph, const std::vector<manifest::ConstraintDoc>& docs,
                      const std::map<std::string, dsl::LabeledStream>& labels, Cycles default_deadline) {
    std::map<std::string, std::vector<BufferId>> by_label;
    for (BufferId b = 0; b < graph.buffers.size(); ++b)
        for (const auto& l : graph.buffers[b].labels) by_label[l].push_back(b);

    auto known_symbol = [&](const std::string& s) {
        return by_label.count(s) || s == graph.slot_symbol || s == "makespan" || graph.assignments.count(s);
    };
    auto label_missing = [&](const std::string& name, const std::string& var) -> std::string {
        if (auto l = labels.find(var); l != labels.end())
            return "'" + name + "': label '" + var + "' (on " + l->second.flow + "." + l->second.stream +
                   ") is carried by no elaborated buffer";
        return "'" + name + "': label '" + var + "' not found";
    };

    std::optional<std::pair<Cycles, std::string>> slot_equal;
    for (const auto& doc : docs) {
        if (const auto* eq = std::get_if<manifest::TimingEqualityDoc>(&doc)) {
            if (eq->variable_name == graph.slot_symbol && eq->op == manifest::EqualityOp::Equal) {
                if (slot_equal && slot_equal->first != eq->value)
                    throw DiagnosticError("contradictory deadline: '" + slot_equal->second + "' sets " +
                                          eq->variable_name + " = " + std::to_string(slot_equal->first) + " but '" +
                                          eq->name + "' sets " + std::to_string(eq->value));
                slot_equal = {eq->value, eq->name};
                continue;
            }
            if (auto l = by_label.find(eq->variable_name); l != by_label.end()) {
                bool all_external = true;
                for (BufferId b : l->second) all_external = all_external && graph.buffers[b].external;
                if (all_external && eq->op != manifest::EqualityOp::Le) {
                    for (BufferId b : l->second) graph.buffers[b].release = std::max(graph.buffers[b].release, eq->value);
                    continue;
                }
                if (!all_external && eq->op == manifest::EqualityOp::Le) {
                    for (BufferId b : l->second) {
                        auto& d = graph.buffers[b].deadline;
                        d = d ? std::min(*d, eq->value) : eq->value;
                    }
                    continue;
                }
                graph.bound_constraints.push_back(as_equation(*eq));
                continue;
            }
            if (!known_symbol(eq->variable_name)) throw DiagnosticError(label_missing(eq->name, eq->variable_name));
            graph.bound_constraints.push_back(as_equation(*eq));
        } else if (const auto* eqn = std::get_if<manifest::TimingEquationDoc>(&doc)) {
            for (const auto& [ph, sym] : eqn->bindings)
                if (!known_symbol(sym))
                    throw DiagnosticError("'" + eqn->name + "': symbol '" + sym + "' (placeholder " + ph +
                                          ") is neither a stream label, '" + graph.slot_symbol +
                                          "', 'makespan' nor a configured assignment");
            graph.bound_constraints.push_back(*eqn);
        }
    }
    graph.deadline = slot_equal ? slot_equal->first : default_deadline;
    return graph;
}

}  // namespace ddtwin::elab
