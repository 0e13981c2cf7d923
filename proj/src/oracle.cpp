// Exhaustive reference: every dispatch order x core x pattern combination is
// simulated; no lower bounds, no symmetry, no memo. The only cut is a partial
// makespan already at the best complete one. Deliberately shares no code with
// the search beyond the public manifest helpers.

#include <algorithm>
#include <limits>
#include <set>

#include "ddtwin/scheduler.hpp"

namespace ddtwin::sched {

namespace {

using manifest::PatternClass;

struct PatInfo {
    PatternClass cls;
    std::string core_token;  // empty: any core
    std::string def_mem, obs_mem;
    std::set<std::string> linked;  // canonical names it conflicts with
};

class Oracle {
public:
    Oracle(const TaskGraph& g, const manifest::HardwareTopology& topo, const manifest::PatternCatalog& cat)
        : g_(g), topo_(topo) {
        for (const auto& p : cat.patterns()) {
            auto tr = manifest::classify_pattern(p.name);
            if (!tr) throw DiagnosticError("oracle: unclassifiable pattern '" + p.name + "'");
            PatInfo info{tr->cls, tr->core.value_or(""), p.defining_memory, p.observing_memory, {}};
            auto take = [&](const std::vector<std::string>& names) {
                for (const auto& n : names) info.linked.insert(manifest::canonical_name(n));
            };
            take(p.exclusive_define_with);
            for (const auto& s : p.shares) take(s);
            info_[manifest::canonical_name(p.name)] = std::move(info);
        }
        core_.assign(g.tasks.size(), -1);
        start_.assign(g.tasks.size(), 0);
        pat_.assign(g.buffers.size(), "");
        tstart_.assign(g.buffers.size(), 0);
        tend_.assign(g.buffers.size(), 0);
        core_free_.assign(topo.cores.size(), 0);
        for (const auto& c : topo.cores) core_tok_.push_back(manifest::canonical_name(c.id));
        for (const auto& b : g.buffers) {
            std::vector<std::string> names;
            for (const auto& n : b.allowed_patterns) names.push_back(manifest::canonical_name(n));
            canon_.push_back(std::move(names));
        }
    }

    std::optional<Cycles> run() {
        if (g_.tasks.empty()) return Cycles{0};
        dfs(0, -1, -1);
        if (best_ == kNone) return std::nullopt;
        return best_;
    }

private:
    static constexpr Cycles kNone = std::numeric_limits<Cycles>::max();

    bool conflicts(const std::string& a, const std::string& b) const {
        const auto& ia = info_.at(a);
        const auto& ib = info_.at(b);
        return ia.linked.count(b) || ib.linked.count(a);
    }

    bool observable(const std::string& p, int def_core, int obs_core) const {
        const auto& in = info_.at(p);
        if (in.cls == PatternClass::Pipeline) return def_core == obs_core;
        const auto* mem = topo_.find_memory(in.obs_mem);
        if (!mem) return false;
        const auto& c = topo_.cores[obs_core];
        return mem->level == manifest::MemoryLevel::DDR || mem->id == c.l2 || mem->id == c.l3;
    }

    Cycles done_at(BufferId b) const {
        const auto& buf = g_.buffers[b];
        return (buf.external || !buf.definer) ? buf.release : tend_[b];
    }

    std::vector<int> cores_for(TaskId t) const {
        std::vector<int> out;
        if (g_.tasks[t].allowed_cores.empty()) {
            for (std::size_t c = 0; c < topo_.cores.size(); ++c) out.push_back(static_cast<int>(c));
        } else {
            for (std::size_t c = 0; c < topo_.cores.size(); ++c)
                if (std::find(g_.tasks[t].allowed_cores.begin(), g_.tasks[t].allowed_cores.end(), topo_.cores[c].id) !=
                    g_.tasks[t].allowed_cores.end())
                    out.push_back(static_cast<int>(c));
        }
        return out;
    }

    void dfs(std::size_t depth, Cycles last_start, long last_task) {
        if (depth == g_.tasks.size()) {
            evaluate();
            return;
        }
        Cycles partial = partial_makespan();
        if (partial >= best_ || (g_.deadline > 0 && partial > g_.deadline)) return;
        for (TaskId t = 0; t < g_.tasks.size(); ++t) {
            if (core_[t] >= 0) continue;
            bool avail = true;
            for (BufferId b : g_.tasks[t].inputs) {
                const auto& buf = g_.buffers[b];
                if (!buf.external && buf.definer && core_[*buf.definer] < 0) avail = false;
            }
            if (!avail) continue;
            Cycles ready = 0;
            for (BufferId b : g_.tasks[t].inputs) ready = std::max(ready, done_at(b));
            for (int c : cores_for(t)) {
                bool ok = true;
                for (BufferId b : g_.tasks[t].inputs) {
                    const auto& buf = g_.buffers[b];
                    if (buf.external || !buf.definer) continue;
                    ok = ok && observable(pat_[b], core_[*buf.definer], c);
                }
                if (!ok) continue;
                Cycles start = std::max(ready, core_free_[c]);
                // orders whose starts run backwards generate nothing new
                if (start < last_start || (start == last_start && static_cast<long>(t) < last_task)) continue;
                Cycles lag = -1;
                if (g_.tasks[t].max_start_lag) lag = *g_.tasks[t].max_start_lag;
                else if (g_.max_start_lag) lag = *g_.max_start_lag;
                if (lag >= 0 && start - ready > lag) continue;
                Cycles saved = core_free_[c];
                core_[t] = c;
                start_[t] = start;
                core_free_[c] = start + g_.tasks[t].runtime;
                place_outputs(t, 0, depth, start);
                core_free_[c] = saved;
                core_[t] = -1;
            }
        }
    }

    void place_outputs(TaskId t, std::size_t k, std::size_t depth, Cycles start) {
        const auto& outs = g_.tasks[t].outputs;
        if (k == outs.size()) {
            dfs(depth + 1, start, static_cast<long>(t));
            return;
        }
        BufferId b = outs[k];
        const auto& buf = g_.buffers[b];
        Cycles fin = start + g_.tasks[t].runtime;
        const std::string& core_tok = core_tok_[core_[t]];
        for (std::size_t i = 0; i < canon_[b].size(); ++i) {
            const std::string& p = canon_[b][i];
            if (!info_.count(p)) throw DiagnosticError("oracle: unknown pattern '" + buf.allowed_patterns[i] + "'");
            const auto& in = info_.at(p);
            if (!in.core_token.empty() && in.core_token != core_tok) continue;
            Cycles d = manifest::transfer_cost(in.cls, buf.size, topo_);
            Cycles s = fin;
            if (d > 0) {
                // slide past every already placed conflicting transfer
                for (bool moved = true; moved;) {
                    moved = false;
                    for (BufferId o = 0; o < g_.buffers.size(); ++o) {
                        if (pat_[o].empty() || tend_[o] - tstart_[o] <= 0 || !conflicts(p, pat_[o])) continue;
                        if (s < tend_[o] && tstart_[o] < s + d) {
                            s = tend_[o];
                            moved = true;
                        }
                    }
                }
            }
            if (buf.deadline && s + d > *buf.deadline) continue;
            pat_[b] = p;
            tstart_[b] = s;
            tend_[b] = s + d;
            place_outputs(t, k + 1, depth, start);
            pat_[b].clear();
        }
    }

    Cycles partial_makespan() const {
        Cycles ms = 0;
        for (TaskId t = 0; t < g_.tasks.size(); ++t)
            if (core_[t] >= 0) ms = std::max(ms, start_[t] + g_.tasks[t].runtime);
        for (BufferId b = 0; b < g_.buffers.size(); ++b)
            if (!pat_[b].empty()) ms = std::max(ms, tend_[b]);
        return ms;
    }

    void evaluate() {
        Cycles ms = 0;
        for (TaskId t = 0; t < g_.tasks.size(); ++t) ms = std::max(ms, start_[t] + g_.tasks[t].runtime);
        for (BufferId b = 0; b < g_.buffers.size(); ++b)
            if (!pat_[b].empty()) ms = std::max(ms, tend_[b]);
        if (g_.deadline > 0 && ms > g_.deadline) return;
        if (ms >= best_) return;
        if (!fits()) return;
        if (!constraints_hold(ms)) return;
        best_ = ms;
    }

    bool fits() const {
        for (const auto& mem : topo_.memories) {
            if (mem.capacity <= 0) continue;
            std::vector<std::pair<Cycles, Bytes>> ev;
            for (BufferId b = 0; b < g_.buffers.size(); ++b) {
                if (pat_[b].empty()) continue;
                const auto& buf = g_.buffers[b];
                const auto& in = info_.at(pat_[b]);
                Cycles from = start_[*buf.definer];
                Cycles until = tend_[b];
                for (TaskId o : buf.observers) until = std::max(until, start_[o] + g_.tasks[o].runtime);
                if (in.obs_mem == mem.id && until > from) {
                    ev.emplace_back(from, buf.size);
                    ev.emplace_back(until, -buf.size);
                }
                if (in.def_mem != in.obs_mem && in.def_mem == mem.id && tend_[b] > from) {
                    ev.emplace_back(from, buf.size);
                    ev.emplace_back(tend_[b], -buf.size);
                }
            }
            for (TaskId t = 0; t < g_.tasks.size(); ++t) {
                if (topo_.cores[core_[t]].l3 != mem.id || g_.tasks[t].internalsize <= 0) continue;
                ev.emplace_back(start_[t], g_.tasks[t].internalsize);
                ev.emplace_back(start_[t] + g_.tasks[t].runtime, -g_.tasks[t].internalsize);
            }
            std::sort(ev.begin(), ev.end());
            Bytes load = 0;
            for (const auto& e : ev)
                if ((load += e.second) > mem.capacity) return false;
        }
        return true;
    }

    bool constraints_hold(Cycles ms) const {
        if (g_.bound_constraints.empty()) return true;
        std::map<std::string, std::int64_t> sym = g_.assignments;
        for (BufferId b = 0; b < g_.buffers.size(); ++b)
            for (const auto& l : g_.buffers[b].labels) {
                Cycles v = done_at(b);
                auto [it, fresh] = sym.emplace(l, v);
                if (!fresh) it->second = std::max(it->second, v);
            }
        sym[g_.slot_symbol] = g_.deadline;
        sym["makespan"] = ms;
        for (const auto& c : g_.bound_constraints) {
            try {
                if (!manifest::evaluate_timing_equation(c, sym)) return false;
            } catch (const DiagnosticError&) {
                return false;
            }
        }
        return true;
    }

    const TaskGraph& g_;
    const manifest::HardwareTopology& topo_;
    std::map<std::string, PatInfo> info_;
    std::vector<int> core_;
    std::vector<Cycles> start_;
    std::vector<std::string> pat_;
    std::vector<Cycles> tstart_, tend_;
    std::vector<Cycles> core_free_;
    std::vector<std::string> core_tok_;
    std::vector<std::vector<std::string>> canon_;
    Cycles best_ = kNone;
};

}  // namespace

std::optional<Cycles> brute_force_oracle(const TaskGraph& graph, const manifest::HardwareTopology& topo,
                                         const manifest::PatternCatalog& catalog, const OracleLimits& limits) {
    if (graph.tasks.size() > limits.max_tasks)
        throw DiagnosticError("oracle refuses " + std::to_string(graph.tasks.size()) + " tasks (limit " +
                              std::to_string(limits.max_tasks) + ")");
    if (topo.cores.size() > limits.max_cores)
        throw DiagnosticError("oracle refuses " + std::to_string(topo.cores.size()) + " cores (limit " +
                              std::to_string(limits.max_cores) + ")");
    for (const auto& b : graph.buffers)
        if (b.allowed_patterns.size() > limits.max_patterns_per_buffer)
            throw DiagnosticError("oracle refuses buffer '" + b.id + "' with " +
                                  std::to_string(b.allowed_patterns.size()) + " patterns (limit " +
                                  std::to_string(limits.max_patterns_per_buffer) + ")");
    if (!graph.topological_order()) throw DiagnosticError("oracle: task graph is cyclic");
    return Oracle(graph, topo, catalog).run();
}

}  // namespace ddtwin::sched
