#include <algorithm>
#include <functional>
#include <queue>
#include <set>
#include <sstream>

#include "ddtwin/graph.hpp"

namespace ddtwin::elab {

using dsl::Direction;

std::optional<TaskId> TaskGraph::find_task(std::string_view id) const {
    for (TaskId t = 0; t < tasks.size(); ++t)
        if (tasks[t].id == id) return t;
    return std::nullopt;
}

std::optional<BufferId> TaskGraph::find_buffer(std::string_view id) const {
    for (BufferId b = 0; b < buffers.size(); ++b)
        if (buffers[b].id == id) return b;
    return std::nullopt;
}

void TaskGraph::rebuild_observers() {
    for (auto& b : buffers) b.observers.clear();
    for (TaskId t = 0; t < tasks.size(); ++t)
        for (BufferId b : tasks[t].inputs) {
            auto& obs = buffers.at(b).observers;
            if (obs.empty() || obs.back() != t) obs.push_back(t);
        }
}

std::optional<std::vector<TaskId>> TaskGraph::topological_order() const {
    std::vector<std::size_t> indeg(tasks.size(), 0);
    std::vector<std::vector<TaskId>> succ(tasks.size());
    for (TaskId t = 0; t < tasks.size(); ++t) {
        std::set<TaskId> preds;
        for (BufferId b : tasks[t].inputs)
            if (buffers[b].definer && *buffers[b].definer != t) preds.insert(*buffers[b].definer);
            else if (buffers[b].definer) return std::nullopt;  // reads its own output
        for (TaskId p : preds) succ[p].push_back(t);
        indeg[t] = preds.size();
    }
    std::priority_queue<TaskId, std::vector<TaskId>, std::greater<>> ready;
    for (TaskId t = 0; t < tasks.size(); ++t)
        if (indeg[t] == 0) ready.push(t);
    std::vector<TaskId> order;
    while (!ready.empty()) {
        TaskId t = ready.top();
        ready.pop();
        order.push_back(t);
        for (TaskId s : succ[t])
            if (--indeg[s] == 0) ready.push(s);
    }
    if (order.size() != tasks.size()) return std::nullopt;
    return order;
}

namespace {

struct Slots {
    std::vector<std::int64_t> dims;
    std::vector<BufferId> ids;  // row-major, 1-based indices
    Direction direction = Direction::Internal;
};

std::string index_suffix(const std::vector<std::int64_t>& dims, std::size_t flat) {
    std::vector<std::int64_t> idx(dims.size());
    for (std::size_t k = dims.size(); k-- > 0;) {
        idx[k] = static_cast<std::int64_t>(flat % static_cast<std::size_t>(dims[k])) + 1;
        flat /= static_cast<std::size_t>(dims[k]);
    }
    std::string s;
    for (auto i : idx) s += "[" + std::to_string(i) + "]";
    return s;
}

class Elaborator {
public:
    Elaborator(const std::vector<dsl::FlowDef>& defs, const dsl::SymbolTable& symbols,
               const std::vector<manifest::FunctionMetadata>& metadata, const manifest::PatternCatalog& catalog)
        : symbols_(symbols), catalog_(catalog) {
        for (const auto& f : defs) flows_[f.name] = &f;
        for (const auto& m : metadata) metadata_[m.name] = &m;
    }

    TaskGraph run(const std::string& entry) {
        auto it = flows_.find(entry);
        if (it == flows_.end()) throw DiagnosticError("entry flow '" + entry + "' is not defined");
        const dsl::FlowDef& f = *it->second;
        std::map<std::string, Slots> env;
        for (const auto& p : f.params) env[p.name] = make_slots(f.name, p, p.direction == Direction::In);
        expand(f, f.name, env, "", {entry});
        return finish();
    }

private:
    [[noreturn]] void fail(SourceLoc loc, const std::string& msg) const {
        throw DiagnosticError(std::vector<Diagnostic>{{Severity::Error, loc, msg, {}}});
    }

    std::int64_t eval(const dsl::Expr& e) const {
        auto v = dsl::evaluate(e, symbols_);
        if (!v || *v <= 0)
            fail(e.loc, "cannot evaluate '" + (e.is_literal() ? std::to_string(e.literal()) : e.name()) +
                            "' to a positive integer");
        return *v;
    }

    Slots make_slots(const std::string& scope, const dsl::StreamDecl& d, bool external) {
        Slots s;
        s.direction = d.direction;
        std::size_t n = 1;
        for (const auto& e : d.shape) {
            s.dims.push_back(eval(e));
            n *= static_cast<std::size_t>(s.dims.back());
        }
        for (std::size_t i = 0; i < n; ++i) {
            Buffer b;
            b.id = scope + "." + d.name + index_suffix(s.dims, i);
            b.external = external;
            b.labels = d.labels;
            s.ids.push_back(graph_.buffers.size());
            graph_.buffers.push_back(std::move(b));
        }
        return s;
    }

    std::vector<BufferId> slice(const Slots& s, const dsl::StreamRef& ref, const std::map<std::string, std::int64_t>& iters,
                                std::vector<std::int64_t>* rest_dims) const {
        if (ref.indices.size() > s.dims.size())
            fail(ref.loc, "shape-arity mismatch on '" + ref.stream + "'");
        std::size_t offset = 0;
        std::size_t stride = s.ids.size();
        for (std::size_t k = 0; k < ref.indices.size(); ++k) {
            const auto& ix = ref.indices[k];
            std::int64_t v;
            if (ix.is_literal()) {
                v = ix.literal();
            } else {
                auto it = iters.find(ix.name());
                if (it == iters.end()) fail(ix.loc, "index '" + ix.name() + "' is not an iterator");
                v = it->second;
            }
            if (v < 1 || v > s.dims[k])
                fail(ix.loc, "index " + std::to_string(v) + " out of range for '" + ref.stream + "'");
            stride /= static_cast<std::size_t>(s.dims[k]);
            offset += static_cast<std::size_t>(v - 1) * stride;
        }
        if (rest_dims) rest_dims->assign(s.dims.begin() + static_cast<std::ptrdiff_t>(ref.indices.size()), s.dims.end());
        return {s.ids.begin() + static_cast<std::ptrdiff_t>(offset),
                s.ids.begin() + static_cast<std::ptrdiff_t>(offset + stride)};
    }

    void expand(const dsl::FlowDef& f, const std::string& scope, std::map<std::string, Slots>& env,
                const std::string& group, std::vector<std::string> stack) {
        for (const auto& d : f.internals) env[d.name] = make_slots(scope, d, false);

        for (const auto& inst : f.instantiations) {
            std::vector<std::pair<std::string, std::pair<std::int64_t, std::int64_t>>> ranges;
            for (const auto& it : inst.iterators) {
                std::int64_t lo = eval(it.lower);
                std::int64_t hi = eval(it.upper);
                if (hi < lo) fail(it.loc, "non-positive range for iterator '" + it.var + "'");
                ranges.push_back({it.var, {lo, hi}});
            }
            std::map<std::string, std::int64_t> iters;
            for (const auto& [v, r] : ranges) iters[v] = r.first;
            for (bool done = false; !done;) {
                std::string suffix;
                if (!ranges.empty()) {
                    suffix = "[";
                    for (std::size_t k = 0; k < ranges.size(); ++k)
                        suffix += (k ? "," : "") + ranges[k].first + "=" + std::to_string(iters[ranges[k].first]);
                    suffix += "]";
                }
                std::string path = scope + "/" + inst.callee + suffix;
                call(f, inst, iters, path, env, group.empty() ? path : group, stack);

                // odometer, last iterator fastest
                done = true;
                for (std::size_t k = ranges.size(); k-- > 0;) {
                    auto& v = iters[ranges[k].first];
                    if (v < ranges[k].second.second) {
                        ++v;
                        done = false;
                        break;
                    }
                    v = ranges[k].second.first;
                }
            }
        }
    }

    void call(const dsl::FlowDef& caller, const dsl::Instantiation& inst, const std::map<std::string, std::int64_t>& iters,
              const std::string& path, std::map<std::string, Slots>& env, const std::string& group,
              const std::vector<std::string>& stack) {
        if (auto sub = flows_.find(inst.callee); sub != flows_.end()) {
            if (std::find(stack.begin(), stack.end(), inst.callee) != stack.end())
                fail(inst.loc, "recursive instantiation of flow '" + inst.callee + "'");
            const dsl::FlowDef& callee = *sub->second;
            std::map<std::string, Slots> inner;
            for (const auto& b : inst.bindings) {
                const dsl::StreamDecl* formal = nullptr;
                for (const auto& p : callee.params)
                    if (p.name == b.formal) formal = &p;
                if (!formal) fail(b.loc, "flow '" + callee.name + "' has no parameter '" + b.formal + "'");
                auto actual = env.find(b.actual.stream);
                if (actual == env.end())
                    fail(b.actual.loc, "unresolved stream '" + b.actual.stream + "' in flow '" + caller.name + "'");
                Slots s;
                s.ids = slice(actual->second, b.actual, iters, &s.dims);
                s.direction = formal->direction;
                std::vector<std::int64_t> want;
                for (const auto& e : formal->shape) want.push_back(eval(e));
                if (want != s.dims)
                    fail(b.loc, "shape-arity mismatch binding '" + b.actual.stream + "' to '" + b.formal + "'");
                for (BufferId id : s.ids)
                    for (const auto& l : formal->labels)
                        if (std::find(graph_.buffers[id].labels.begin(), graph_.buffers[id].labels.end(), l) ==
                            graph_.buffers[id].labels.end())
                            graph_.buffers[id].labels.push_back(l);
                inner[b.formal] = std::move(s);
            }
            for (const auto& p : callee.params) {
                if (inner.count(p.name)) continue;
                if (p.direction == Direction::In)
                    fail(inst.loc, "input parameter '" + p.name + "' of flow '" + callee.name + "' is not bound");
                inner[p.name] = make_slots(path, p, false);
            }
            auto next = stack;
            next.push_back(callee.name);
            expand(callee, path, inner, group, next);
            return;
        }

        auto md = metadata_.find(inst.callee);
        if (md == metadata_.end()) fail(inst.loc, "missing metadata for leaf function '" + inst.callee + "'");
        const manifest::FunctionMetadata& meta = *md->second;

        std::string id = path;
        for (int n = 2; task_ids_.count(id); ++n) id = path + "#" + std::to_string(n);
        task_ids_.insert(id);

        TaskInstance task;
        task.id = id;
        task.function = inst.callee;
        task.runtime = meta.runtime;
        task.internalsize = meta.internalsize;
        task.group = group;
        TaskId tid = graph_.tasks.size();

        std::vector<std::string> patterns;
        for (const auto& name : meta.available_patterns) {
            const manifest::Pattern* p = catalog_.find(name);
            if (!p)
                fail(inst.loc, "pattern '" + name + "' of function '" + meta.name + "' does not resolve in the catalog");
            if (std::find(patterns.begin(), patterns.end(), p->name) == patterns.end()) patterns.push_back(p->name);
        }

        for (const auto& b : inst.bindings) {
            auto actual = env.find(b.actual.stream);
            if (actual == env.end())
                fail(b.actual.loc, "unresolved stream '" + b.actual.stream + "' in flow '" + caller.name + "'");
            auto ids = slice(actual->second, b.actual, iters, nullptr);
            bool input;
            if (b.formal.ends_with("_in")) input = true;
            else if (b.formal.ends_with("_out")) input = false;
            else input = actual->second.direction == Direction::In;
            for (BufferId bid : ids) {
                Buffer& buf = graph_.buffers[bid];
                if (input) {
                    if (std::find(task.inputs.begin(), task.inputs.end(), bid) == task.inputs.end())
                        task.inputs.push_back(bid);
                    continue;
                }
                if (buf.external)
                    fail(b.loc, "'" + task.id + "' defines input stream '" + buf.id + "'");
                if (buf.definer)
                    fail(b.loc, "stream '" + buf.id + "' defined twice (by '" + graph_.tasks[*buf.definer].id +
                                    "' and '" + task.id + "')");
                buf.definer = tid;
                buf.size = meta.elementsize;
                buf.allowed_patterns = patterns;
                task.outputs.push_back(bid);
            }
        }
        graph_.tasks.push_back(std::move(task));
    }

    TaskGraph finish() {
        graph_.rebuild_observers();
        for (const auto& b : graph_.buffers)
            if (!b.external && !b.definer && !b.observers.empty())
                throw DiagnosticError("stream '" + b.id + "' is observed by '" + graph_.tasks[b.observers.front()].id +
                                      "' but never defined");
        // Drop slots nobody touches.
        std::vector<std::optional<BufferId>> remap(graph_.buffers.size());
        std::vector<Buffer> kept;
        for (BufferId b = 0; b < graph_.buffers.size(); ++b) {
            const Buffer& buf = graph_.buffers[b];
            if (buf.definer || !buf.observers.empty()) {
                remap[b] = kept.size();
                kept.push_back(buf);
            }
        }
        graph_.buffers = std::move(kept);
        for (auto& t : graph_.tasks) {
            for (auto& b : t.inputs) b = *remap[b];
            for (auto& b : t.outputs) b = *remap[b];
        }
        if (!graph_.topological_order()) throw DiagnosticError("cycle detected in the elaborated task graph: " + cycle_member());
        return std::move(graph_);
    }

    // Some task that lies on a dependency cycle.
    std::string cycle_member() const {
        std::vector<int> color(graph_.tasks.size(), 0);
        std::function<std::optional<TaskId>(TaskId)> dfs = [&](TaskId t) -> std::optional<TaskId> {
            color[t] = 1;
            for (BufferId b : graph_.tasks[t].outputs)
                for (TaskId o : graph_.buffers[b].observers) {
                    if (color[o] == 1) return o;
                    if (color[o] == 0)
                        if (auto r = dfs(o)) return r;
                }
            color[t] = 2;
            return std::nullopt;
        };
        for (TaskId t = 0; t < graph_.tasks.size(); ++t)
            if (color[t] == 0)
                if (auto r = dfs(t)) return "'" + graph_.tasks[*r].id + "'";
        return "?";
    }

    const dsl::SymbolTable& symbols_;
    const manifest::PatternCatalog& catalog_;
    std::map<std::string, const dsl::FlowDef*> flows_;
    std::map<std::string, const manifest::FunctionMetadata*> metadata_;
    std::set<std::string> task_ids_;
    TaskGraph graph_;
};

}  // namespace

TaskGraph elaborate(const std::vector<dsl::FlowDef>& defs, const std::string& entry, const dsl::SymbolTable& symbols,
                    const std::vector<manifest::FunctionMetadata>& metadata, const manifest::PatternCatalog& catalog) {
    return Elaborator(defs, symbols, metadata, catalog).run(entry);
}

const char* to_string(FindingKind k) {
    switch (k) {
        case FindingKind::UndefinedObserved: return "UNDEFINED_OBSERVED";
        case FindingKind::UnreachableTask: return "UNREACHABLE_TASK";
        case FindingKind::GuaranteedOverflow: return "GUARANTEED_OVERFLOW";
        case FindingKind::NoAllowedPattern: return "NO_ALLOWED_PATTERN";
    }
    return "UNKNOWN";
}

std::vector<Finding> check_static(const TaskGraph& graph, const manifest::HardwareTopology& topo) {
    std::vector<Finding> out;
    for (const auto& b : graph.buffers) {
        if (!b.external && !b.definer && !b.observers.empty())
            out.push_back({FindingKind::UndefinedObserved, b.id,
                           "buffer '" + b.id + "' is read but never written (read before write)"});
        if (b.definer && b.allowed_patterns.empty())
            out.push_back({FindingKind::NoAllowedPattern, b.id, "buffer '" + b.id + "' has no allowed pattern"});
    }
    Bytes cap = topo.max_capacity();
    for (const auto& b : graph.buffers)
        if (b.size > cap)
            out.push_back({FindingKind::GuaranteedOverflow, b.id,
                           "buffer '" + b.id + "' (" + std::to_string(b.size) +
                               " bytes) exceeds every memory capacity (max " + std::to_string(cap) + ")"});
    for (const auto& t : graph.tasks)
        if (t.internalsize > cap)
            out.push_back({FindingKind::GuaranteedOverflow, t.id,
                           "task '" + t.id + "' working set (" + std::to_string(t.internalsize) +
                               " bytes) exceeds every memory capacity (max " + std::to_string(cap) + ")"});

    std::vector<bool> reached(graph.tasks.size(), false);
    bool changed = true;
    while (changed) {
        changed = false;
        for (TaskId t = 0; t < graph.tasks.size(); ++t) {
            if (reached[t]) continue;
            for (BufferId b : graph.tasks[t].inputs) {
                const Buffer& buf = graph.buffers[b];
                if (buf.external || (buf.definer && reached[*buf.definer])) {
                    reached[t] = true;
                    changed = true;
                    break;
                }
            }
        }
    }
    for (TaskId t = 0; t < graph.tasks.size(); ++t)
        if (!reached[t])
            out.push_back({FindingKind::UnreachableTask, graph.tasks[t].id,
                           "task '" + graph.tasks[t].id + "' has no path from any graph input"});
    return out;
}

}  // namespace ddtwin::elab
