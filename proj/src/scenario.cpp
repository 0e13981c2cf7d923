#include <algorithm>
#include <set>

#include "ddtwin/scenario.hpp"

namespace ddtwin::scenario {

using elab::Buffer;
using elab::BufferId;
using elab::TaskId;
using elab::TaskInstance;

const char* to_string(InjectionKind k) {
    switch (k) {
        case InjectionKind::EvictBuffer: return "EVICT_BUFFER";
        case InjectionKind::PinTasks: return "PIN_TASKS";
        case InjectionKind::StartLag: return "START_LAG";
        case InjectionKind::AddFlow: return "ADD_FLOW";
        case InjectionKind::TightenDeadline: return "TIGHTEN_DEADLINE";
    }
    return "?";
}

InjectionKind injection_kind_from(std::string_view s) {
    for (auto k : {InjectionKind::EvictBuffer, InjectionKind::PinTasks, InjectionKind::StartLag, InjectionKind::AddFlow,
                   InjectionKind::TightenDeadline})
        if (s == to_string(k)) return k;
    throw DiagnosticError("unknown injection kind '" + std::string(s) + "'");
}

const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::Feasible: return "feasible";
        case Outcome::Infeasible: return "infeasible";
        case Outcome::Unknown: return "unknown";
    }
    return "?";
}

const char* to_string(Risk r) {
    switch (r) {
        case Risk::CertainFailure: return "CERTAIN_FAILURE";
        case Risk::High: return "HIGH";
        case Risk::Moderate: return "MODERATE";
        case Risk::Low: return "LOW";
        case Risk::Unknown: return "UNKNOWN";
    }
    return "?";
}

Selector Selector::parse(std::string_view s) {
    Selector sel;
    if (s == "all") return sel;
    auto colon = s.find(':');
    if (colon == std::string_view::npos) throw DiagnosticError("unknown selector '" + std::string(s) + "'");
    std::string key(s.substr(0, colon));
    sel.text = std::string(s.substr(colon + 1));
    if (sel.text.empty()) throw DiagnosticError("selector '" + std::string(s) + "' has an empty argument");
    if (key == "id") sel.kind = Kind::Id;
    else if (key == "function") sel.kind = Kind::Function;
    else if (key == "group") sel.kind = Kind::Group;
    else if (key == "size_lt" || key == "size_ge") {
        sel.kind = key == "size_lt" ? Kind::SizeLt : Kind::SizeGe;
        try {
            std::size_t used = 0;
            sel.size = std::stoll(sel.text, &used);
            if (used != sel.text.size() || sel.size < 0) throw std::invalid_argument("size");
        } catch (const std::exception&) {
            throw DiagnosticError("selector '" + std::string(s) + "' needs a non-negative byte count");
        }
    } else {
        throw DiagnosticError("unknown selector '" + std::string(s) + "'");
    }
    return sel;
}

std::string Selector::str() const {
    switch (kind) {
        case Kind::All: return "all";
        case Kind::Id: return "id:" + text;
        case Kind::Function: return "function:" + text;
        case Kind::Group: return "group:" + text;
        case Kind::SizeLt: return "size_lt:" + std::to_string(size);
        case Kind::SizeGe: return "size_ge:" + std::to_string(size);
    }
    return "?";
}

std::string Injection::str() const {
    std::string s = std::string(to_string(kind)) + " " + target.str();
    switch (kind) {
        case InjectionKind::PinTasks: {
            auto c = cores;
            std::sort(c.begin(), c.end());
            s += " cores=";
            for (std::size_t i = 0; i < c.size(); ++i) s += (i ? "," : "") + c[i];
            break;
        }
        case InjectionKind::StartLag:
        case InjectionKind::TightenDeadline: s += " value=" + std::to_string(value); break;
        case InjectionKind::AddFlow: s += " copies=" + std::to_string(copies); break;
        case InjectionKind::EvictBuffer: break;
    }
    return s;
}

namespace {

bool task_matches(const Selector& s, const TaskInstance& t) {
    switch (s.kind) {
        case Selector::Kind::All: return true;
        case Selector::Kind::Id: return t.id == s.text;
        case Selector::Kind::Function: return t.function == s.text;
        case Selector::Kind::Group: return t.group == s.text;
        default: throw DiagnosticError("selector '" + s.str() + "' applies to buffers, not tasks");
    }
}

bool buffer_matches(const Selector& s, const TaskGraph& g, const Buffer& b) {
    if (b.external || !b.definer) return false;
    const auto& def = g.tasks[*b.definer];
    switch (s.kind) {
        case Selector::Kind::All: return true;
        case Selector::Kind::Id: return b.id == s.text;
        case Selector::Kind::Function: return def.function == s.text;
        case Selector::Kind::Group: return def.group == s.text;
        case Selector::Kind::SizeLt: return b.size < s.size;
        case Selector::Kind::SizeGe: return b.size >= s.size;
    }
    return false;
}

std::string renamed(const std::string& id, const std::string& group, int k) {
    std::string tag = "+" + std::to_string(k);
    if (!group.empty() && id.compare(0, group.size(), group) == 0) return group + tag + id.substr(group.size());
    return id + tag;
}

void add_flow(TaskGraph& g, const Injection& inj) {
    std::vector<std::string> groups;
    for (const auto& t : g.tasks)
        if (task_matches(inj.target, t) && std::find(groups.begin(), groups.end(), t.group) == groups.end())
            groups.push_back(t.group);
    if (groups.empty()) throw DiagnosticError("ADD_FLOW: selector '" + inj.target.str() + "' matches no flow instance");
    if (inj.copies < 1) throw DiagnosticError("ADD_FLOW: copies must be >= 1");
    const std::size_t nT = g.tasks.size();
    for (const auto& grp : groups) {
        for (int k = 1; k <= inj.copies; ++k) {
            std::map<TaskId, TaskId> tmap;
            std::map<BufferId, BufferId> bmap;
            for (TaskId t = 0; t < nT; ++t)
                if (g.tasks[t].group == grp) {
                    TaskId next = g.tasks.size() + tmap.size();
                    tmap[t] = next;
                }
            for (BufferId b = 0; b < g.buffers.size(); ++b) {
                const auto& buf = g.buffers[b];
                if (buf.definer && tmap.count(*buf.definer)) {
                    BufferId next = g.buffers.size() + bmap.size();
                    bmap[b] = next;
                }
            }
            for (const auto& [b, _] : bmap) {
                Buffer copy = g.buffers[b];
                copy.id = renamed(copy.id, grp, k);
                if (g.find_buffer(copy.id)) throw DiagnosticError("ADD_FLOW: clone buffer id '" + copy.id + "' collides");
                copy.definer = tmap.at(*copy.definer);
                copy.observers.clear();
                g.buffers.push_back(std::move(copy));
            }
            for (const auto& [t, _] : tmap) {
                TaskInstance copy = g.tasks[t];
                copy.id = renamed(copy.id, grp, k);
                if (g.find_task(copy.id)) throw DiagnosticError("ADD_FLOW: clone task id '" + copy.id + "' collides");
                copy.group = grp + "+" + std::to_string(k);
                for (auto& b : copy.inputs)
                    if (auto it = bmap.find(b); it != bmap.end()) b = it->second;
                for (auto& b : copy.outputs) b = bmap.at(b);
                g.tasks.push_back(std::move(copy));
            }
        }
    }
    g.rebuild_observers();
}

}  // namespace

TaskGraph apply_injections(const TaskGraph& graph, const ScenarioSpec& spec) {
    TaskGraph g = graph;
    for (const auto& inj : spec.injections) {
        const std::string where = "scenario '" + spec.name + "': " + to_string(inj.kind) + " " + inj.target.str();
        switch (inj.kind) {
            case InjectionKind::EvictBuffer: {
                std::size_t hit = 0;
                for (auto& b : g.buffers) {
                    if (!buffer_matches(inj.target, g, b)) continue;
                    ++hit;
                    std::vector<std::string> keep;
                    for (const auto& p : b.allowed_patterns) {
                        auto tr = manifest::classify_pattern(p);
                        if (tr && tr->cls == manifest::PatternClass::BigDelay) keep.push_back(p);
                    }
                    if (keep.empty())
                        throw DiagnosticError(where + ": buffer '" + b.id +
                                              "' has no big_delay pattern, eviction would leave nothing allowed");
                    b.allowed_patterns = std::move(keep);
                }
                if (hit == 0) throw DiagnosticError(where + ": selector matches no buffer");
                break;
            }
            case InjectionKind::PinTasks: {
                if (inj.cores.empty()) throw DiagnosticError(where + ": no cores given");
                std::size_t hit = 0;
                for (auto& t : g.tasks) {
                    if (!task_matches(inj.target, t)) continue;
                    ++hit;
                    std::vector<std::string> keep;
                    for (const auto& c : inj.cores)
                        if (t.allowed_cores.empty() ||
                            std::find(t.allowed_cores.begin(), t.allowed_cores.end(), c) != t.allowed_cores.end())
                            keep.push_back(c);
                    if (keep.empty())
                        throw DiagnosticError(where + ": task '" + t.id + "' would be left with no allowed core");
                    t.allowed_cores = std::move(keep);
                }
                if (hit == 0) throw DiagnosticError(where + ": selector matches no task");
                break;
            }
            case InjectionKind::StartLag: {
                if (inj.value < 0) throw DiagnosticError(where + ": lag must be >= 0");
                if (inj.target.kind == Selector::Kind::All) {
                    g.max_start_lag = g.max_start_lag ? std::min(*g.max_start_lag, inj.value) : inj.value;
                    for (auto& t : g.tasks)
                        if (t.max_start_lag) t.max_start_lag = std::min(*t.max_start_lag, inj.value);
                } else {
                    std::size_t hit = 0;
                    for (auto& t : g.tasks) {
                        if (!task_matches(inj.target, t)) continue;
                        ++hit;
                        auto cur = t.max_start_lag ? t.max_start_lag : g.max_start_lag;
                        t.max_start_lag = cur ? std::min(*cur, inj.value) : inj.value;
                    }
                    if (hit == 0) throw DiagnosticError(where + ": selector matches no task");
                }
                break;
            }
            case InjectionKind::AddFlow: add_flow(g, inj); break;
            case InjectionKind::TightenDeadline:
                if (inj.value <= 0) throw DiagnosticError(where + ": deadline must be > 0");
                g.deadline = g.deadline > 0 ? std::min(g.deadline, inj.value) : inj.value;
                break;
        }
    }
    return g;
}

int delta_pct(Cycles baseline, Cycles latency) {
    if (baseline <= 0) throw DiagnosticError("delta_pct: baseline latency must be positive");
    // floor((200*(L - L0) + L0) / (2*L0)) == round half up of 100*(L/L0 - 1)
    __int128 num = static_cast<__int128>(latency - baseline) * 200 + baseline;
    __int128 den = static_cast<__int128>(baseline) * 2;
    __int128 q = num / den;
    if (num % den != 0 && num < 0) --q;
    return static_cast<int>(q);
}

Risk classify(std::optional<int> delta, Outcome outcome, const manifest::RiskThresholds& t) {
    if (outcome == Outcome::Infeasible) return Risk::CertainFailure;
    if (outcome == Outcome::Unknown || !delta) return Risk::Unknown;
    if (*delta >= t.high_pct) return Risk::High;
    if (*delta >= t.moderate_pct) return Risk::Moderate;
    return Risk::Low;
}

ScenarioResult evaluate_scenario(const ScenarioSpec& spec, const TaskGraph& graph,
                                 const manifest::HardwareTopology& topo, const manifest::PatternCatalog& catalog,
                                 const sched::SolveOptions& opts, Cycles baseline,
                                 const manifest::RiskThresholds& risk) {
    if (baseline <= 0 && !graph.tasks.empty())
        throw DiagnosticError("scenario '" + spec.name + "': baseline is not feasible, deltas are undefined");
    TaskGraph g = apply_injections(graph, spec);
    auto out = sched::solve_best_case(g, topo, catalog, opts);
    ScenarioResult r;
    r.name = spec.name;
    r.baseline = baseline;
    switch (out.status) {
        case sched::SolveStatus::Optimal:
        case sched::SolveStatus::Feasible:
            r.outcome = Outcome::Feasible;
            r.latency = out.schedule->makespan;
            r.delta_pct = baseline > 0 ? delta_pct(baseline, r.latency) : 0;
            break;
        case sched::SolveStatus::Infeasible:
            r.outcome = Outcome::Infeasible;
            r.witness = out.witness;
            break;
        case sched::SolveStatus::Unknown:
            r.outcome = Outcome::Unknown;
            r.witness = out.witness;
            break;
    }
    r.risk = classify(r.delta_pct, r.outcome, risk);
    r.recommended = !(r.risk == Risk::Low && r.delta_pct && *r.delta_pct < risk.recommend_floor_pct);
    return r;
}

std::vector<ScenarioSpec> enumerate_scenarios(const TaskGraph& graph, const manifest::ScenarioStrategy& strategy) {
    std::vector<ScenarioSpec> specs;
    if (graph.tasks.empty()) return specs;
    std::set<std::string> seen;
    auto offer = [&](ScenarioSpec s) {
        std::vector<std::string> keys;
        for (const auto& i : s.injections) keys.push_back(i.str());
        std::sort(keys.begin(), keys.end());
        std::string key;
        for (const auto& k : keys) key += k + "\n";
        if (seen.count(key)) return;
        try {
            apply_injections(graph, s);
        } catch (const DiagnosticError&) {
            return;  // family member not applicable to this graph
        }
        seen.insert(key);
        specs.push_back(std::move(s));
    };
    auto evict = [](Selector::Kind k, std::string text, Bytes size) {
        Injection i;
        i.kind = InjectionKind::EvictBuffer;
        i.target.kind = k;
        i.target.text = std::move(text);
        i.target.size = size;
        return i;
    };

    offer({"no-constraints", {}, "no-constraints"});
    std::set<std::string> functions;
    for (const auto& t : graph.tasks) functions.insert(t.function);
    for (const auto& f : functions) offer({"evict:" + f, {evict(Selector::Kind::Function, f, 0)}, "no-constraints"});
    const Bytes th = strategy.size_threshold;
    auto small = evict(Selector::Kind::SizeLt, std::to_string(th), th);
    auto large = evict(Selector::Kind::SizeGe, std::to_string(th), th);
    offer({"small-evict", {small}, "no-constraints"});
    offer({"large-evict", {large}, "no-constraints"});
    offer({"small+large-evict", {small, large}, "no-constraints"});

    std::vector<std::string> groups;
    for (const auto& t : graph.tasks)
        if (std::find(groups.begin(), groups.end(), t.group) == groups.end()) groups.push_back(t.group);
    std::sort(groups.begin(), groups.end());
    std::string target = strategy.add_flow_target.value_or(groups.front());
    Injection add;
    add.kind = InjectionKind::AddFlow;
    add.target.kind = Selector::Kind::Group;
    add.target.text = target;
    add.copies = strategy.add_flow_copies;
    offer({"add-flow:+" + std::to_string(strategy.add_flow_copies), {add}, "no-constraints"});

    for (Cycles lag : strategy.start_lag_sweep) {
        Injection i;
        i.kind = InjectionKind::StartLag;
        i.value = lag;
        offer({"start-lag:" + std::to_string(lag), {i}, "no-constraints"});
    }
    return specs;
}

std::vector<ScenarioResult> rank_scenarios(std::vector<ScenarioResult> results) {
    for (const auto& r : results)
        if (r.baseline != results.front().baseline)
            throw DiagnosticError("mixed baselines: '" + results.front().name + "' uses " +
                                  std::to_string(results.front().baseline) + ", '" + r.name + "' uses " +
                                  std::to_string(r.baseline));
    auto tier = [](const ScenarioResult& r) {
        return r.outcome == Outcome::Infeasible ? 0 : r.outcome == Outcome::Feasible ? 1 : 2;
    };
    std::stable_sort(results.begin(), results.end(), [&](const ScenarioResult& a, const ScenarioResult& b) {
        if (tier(a) != tier(b)) return tier(a) < tier(b);
        int da = a.delta_pct.value_or(0), db = b.delta_pct.value_or(0);
        if (da != db) return da > db;
        return a.name < b.name;
    });
    return results;
}

}  // namespace ddtwin::scenario
