#include <algorithm>

#include "json.hpp"
#include "sched_model.hpp"

namespace ddtwin::sched {

using nlohmann::json;

const char* to_string(ViolationKind k) {
    switch (k) {
        case ViolationKind::ReadBeforeWrite: return "READ_BEFORE_WRITE";
        case ViolationKind::WriteBeforeRead: return "WRITE_BEFORE_READ";
        case ViolationKind::BufferOverflow: return "BUFFER_OVERFLOW";
        case ViolationKind::DeadlineMiss: return "DEADLINE_MISS";
        case ViolationKind::CoreOverlap: return "CORE_OVERLAP";
        case ViolationKind::PatternViolation: return "PATTERN_VIOLATION";
        case ViolationKind::LagViolation: return "LAG_VIOLATION";
        case ViolationKind::TransferConflict: return "TRANSFER_CONFLICT";
        case ViolationKind::CoreRestriction: return "CORE_RESTRICTION";
        case ViolationKind::ConstraintViolation: return "CONSTRAINT_VIOLATION";
    }
    return "?";
}

namespace {

void check_shape(const Schedule& s, const TaskGraph& g) {
    if (s.tasks.size() != g.tasks.size() || s.transfers.size() != g.buffers.size())
        throw DiagnosticError("schedule does not match the graph (" + std::to_string(s.tasks.size()) + " tasks, " +
                              std::to_string(s.transfers.size()) + " transfers vs " + std::to_string(g.tasks.size()) +
                              " tasks, " + std::to_string(g.buffers.size()) + " buffers)");
}

Cycles completion(const Schedule& s, const TaskGraph& g, BufferId b) {
    const auto& buf = g.buffers[b];
    if (buf.external || !buf.definer) return buf.release;
    if (s.transfers[b]) return s.transfers[b]->start + s.transfers[b]->duration;
    return s.tasks[*buf.definer].start + g.tasks[*buf.definer].runtime;
}

detail::Occupancy occupancy(const Schedule& s, const TaskGraph& g, const manifest::HardwareTopology& topo,
                            const manifest::PatternCatalog& cat) {
    detail::Occupancy occ;
    for (TaskId t = 0; t < g.tasks.size(); ++t) {
        auto c = topo.core_index(s.tasks[t].core);
        occ.task_core.push_back(c ? static_cast<int>(*c) : -1);
        occ.task_start.push_back(s.tasks[t].start);
        occ.task_finish.push_back(s.tasks[t].start + g.tasks[t].runtime);
    }
    for (BufferId b = 0; b < g.buffers.size(); ++b) {
        const auto& tr = s.transfers[b];
        auto p = tr ? cat.index_of(tr->pattern) : std::nullopt;
        occ.buf_pat.push_back(p ? static_cast<int>(*p) : -1);
        occ.buf_start.push_back(tr ? tr->start : 0);
        occ.buf_end.push_back(completion(s, g, b));
    }
    return occ;
}

Cycles makespan_of(const Schedule& s, const TaskGraph& g) {
    Cycles m = 0;
    for (TaskId t = 0; t < g.tasks.size(); ++t) m = std::max(m, s.tasks[t].start + g.tasks[t].runtime);
    for (const auto& tr : s.transfers)
        if (tr) m = std::max(m, tr->start + tr->duration);
    return m;
}

}  // namespace

std::vector<Cycles> compute_ready_times(const Schedule& schedule, const TaskGraph& graph) {
    check_shape(schedule, graph);
    std::vector<Cycles> ready(graph.tasks.size(), 0);
    for (TaskId t = 0; t < graph.tasks.size(); ++t)
        for (BufferId b : graph.tasks[t].inputs) ready[t] = std::max(ready[t], completion(schedule, graph, b));
    return ready;
}

std::map<std::string, std::int64_t> schedule_symbols(const Schedule& schedule, const TaskGraph& graph) {
    check_shape(schedule, graph);
    detail::Occupancy occ;
    for (BufferId b = 0; b < graph.buffers.size(); ++b) {
        occ.buf_pat.push_back(schedule.transfers[b] ? 0 : -1);
        occ.buf_end.push_back(completion(schedule, graph, b));
    }
    return detail::derive_symbols(graph, occ, makespan_of(schedule, graph));
}

std::vector<Violation> check_schedule(const Schedule& s, const TaskGraph& g, const manifest::HardwareTopology& topo,
                                      const manifest::PatternCatalog& cat, const CheckOptions& opts) {
    check_shape(s, g);
    detail::Model m = detail::build_model(g, topo, cat);
    std::vector<Violation> out;
    auto add = [&](ViolationKind k, const std::string& subject, const std::string& msg) {
        out.push_back({k, subject, msg});
    };
    auto finish = [&](TaskId t) { return s.tasks[t].start + g.tasks[t].runtime; };
    auto num = [](Cycles c) { return std::to_string(c); };

    // cores
    std::vector<int> core(g.tasks.size(), -1);
    for (TaskId t = 0; t < g.tasks.size(); ++t) {
        const auto& id = g.tasks[t].id;
        auto c = topo.core_index(s.tasks[t].core);
        if (!c) {
            add(ViolationKind::CoreRestriction, id, "core '" + s.tasks[t].core + "' does not exist");
            continue;
        }
        core[t] = static_cast<int>(*c);
        if (!std::binary_search(m.task_cores[t].begin(), m.task_cores[t].end(), core[t]))
            add(ViolationKind::CoreRestriction, id, "runs on '" + s.tasks[t].core + "' outside its allowed cores");
        if (s.tasks[t].start < 0) add(ViolationKind::ReadBeforeWrite, id, "starts before the slot (" + num(s.tasks[t].start) + ")");
    }
    for (std::size_t c = 0; c < m.nC; ++c) {
        std::vector<TaskId> on;
        for (TaskId t = 0; t < g.tasks.size(); ++t)
            if (core[t] == static_cast<int>(c)) on.push_back(t);
        std::sort(on.begin(), on.end(), [&](TaskId a, TaskId b) {
            return std::pair(s.tasks[a].start, a) < std::pair(s.tasks[b].start, b);
        });
        for (std::size_t i = 0; i + 1 < on.size(); ++i) {
            // compare against every later task that starts before this one ends
            for (std::size_t j = i + 1; j < on.size() && s.tasks[on[j]].start < finish(on[i]); ++j)
                add(ViolationKind::CoreOverlap, g.tasks[on[i]].id + " / " + g.tasks[on[j]].id,
                    "overlap on " + topo.cores[c].id + ": [" + num(s.tasks[on[i]].start) + ", " + num(finish(on[i])) +
                        ") and [" + num(s.tasks[on[j]].start) + ", " + num(finish(on[j])) + ")");
        }
    }

    // patterns and transfers
    std::vector<int> pat(g.buffers.size(), -1);
    for (BufferId b = 0; b < g.buffers.size(); ++b) {
        const auto& buf = g.buffers[b];
        const auto& tr = s.transfers[b];
        if (buf.external || !buf.definer) {
            if (tr) add(ViolationKind::PatternViolation, buf.id, "external buffer carries a transfer");
            continue;
        }
        TaskId d = *buf.definer;
        if (!tr) {
            add(ViolationKind::PatternViolation, buf.id, "no pattern chosen");
            continue;
        }
        auto p = cat.index_of(tr->pattern);
        if (!p) {
            add(ViolationKind::PatternViolation, buf.id, "pattern '" + tr->pattern + "' is not in the catalog");
            continue;
        }
        pat[b] = static_cast<int>(*p);
        if (std::find(m.buf_pats[b].begin(), m.buf_pats[b].end(), pat[b]) == m.buf_pats[b].end())
            add(ViolationKind::PatternViolation, buf.id, "pattern '" + tr->pattern + "' is not allowed for this buffer");
        Cycles want = manifest::transfer_cost(m.pat_cls[pat[b]], buf.size, topo);
        if (tr->duration != want)
            add(ViolationKind::PatternViolation, buf.id,
                "transfer lasts " + num(tr->duration) + " cycles, pattern cost is " + num(want));
        if (core[d] >= 0 && !m.definer_ok(pat[b], core[d]))
            add(ViolationKind::PatternViolation, buf.id,
                "pattern '" + tr->pattern + "' cannot be defined from core '" + s.tasks[d].core + "'");
        if (tr->start < finish(d))
            add(ViolationKind::ReadBeforeWrite, buf.id,
                "transfer starts at " + num(tr->start) + " before its definer finishes at " + num(finish(d)));
        for (TaskId o : buf.observers)
            if (core[d] >= 0 && core[o] >= 0 && !m.observer_ok(pat[b], core[d], core[o]))
                add(ViolationKind::PatternViolation, buf.id,
                    "pattern '" + tr->pattern + "' cannot be observed from core '" + s.tasks[o].core + "' (" +
                        g.tasks[o].id + ")");
        if (buf.deadline && tr->start + tr->duration > *buf.deadline)
            add(ViolationKind::DeadlineMiss, buf.id,
                "completes at " + num(tr->start + tr->duration) + " after its bound " + num(*buf.deadline));
    }
    for (BufferId a = 0; a < g.buffers.size(); ++a) {
        if (pat[a] < 0 || s.transfers[a]->duration <= 0) continue;
        for (BufferId b = a + 1; b < g.buffers.size(); ++b) {
            if (pat[b] < 0 || s.transfers[b]->duration <= 0 || !m.conflict[pat[a]][pat[b]]) continue;
            const auto& x = *s.transfers[a];
            const auto& y = *s.transfers[b];
            if (x.start < y.start + y.duration && y.start < x.start + x.duration)
                add(ViolationKind::TransferConflict, g.buffers[a].id + " / " + g.buffers[b].id,
                    "'" + x.pattern + "' and '" + y.pattern + "' overlap in time");
        }
    }

    // precedence and lag
    auto ready = compute_ready_times(s, g);
    for (TaskId t = 0; t < g.tasks.size(); ++t) {
        for (BufferId b : g.tasks[t].inputs) {
            Cycles avail = completion(s, g, b);
            if (s.tasks[t].start < avail)
                add(ViolationKind::ReadBeforeWrite, g.tasks[t].id,
                    "reads '" + g.buffers[b].id + "' at " + num(s.tasks[t].start) + ", available at " + num(avail));
        }
        if (m.lag[t] && s.tasks[t].start - ready[t] > *m.lag[t])
            add(ViolationKind::LagViolation, g.tasks[t].id,
                "starts " + num(s.tasks[t].start - ready[t]) + " cycles after its inputs are ready (max " +
                    num(*m.lag[t]) + ")");
    }

    // residency
    auto occ = occupancy(s, g, topo, cat);
    for (BufferId b = 0; b < g.buffers.size(); ++b)
        if (pat[b] < 0) occ.buf_pat[b] = -1;
    if (auto ov = detail::find_overflow(m, occ))
        add(ViolationKind::BufferOverflow, ov->memory,
            "holds " + std::to_string(ov->load) + " bytes at cycle " + num(ov->at) + ", capacity " +
                std::to_string(ov->capacity));

    // deadline and bound constraints
    Cycles ms = makespan_of(s, g);
    if (g.deadline > 0 && ms > g.deadline)
        add(ViolationKind::DeadlineMiss, "makespan", num(ms) + " exceeds the deadline " + num(g.deadline));
    if (!g.bound_constraints.empty()) {
        auto sym = detail::derive_symbols(g, occ, ms);
        for (const auto& c : g.bound_constraints) {
            bool ok = false;
            std::string why = "evaluates false";
            try {
                ok = manifest::evaluate_timing_equation(c, sym);
            } catch (const DiagnosticError& e) {
                why = e.what();
            }
            if (!ok) add(ViolationKind::ConstraintViolation, c.name, c.equation_text + " " + why);
        }
    }

    // slot n+1 redefines a buffer while slot n still reads it
    if (opts.wraparound && g.deadline > 0) {
        for (BufferId b = 0; b < g.buffers.size(); ++b) {
            const auto& buf = g.buffers[b];
            if (buf.external || !buf.definer) continue;
            Cycles last_read = completion(s, g, b);
            for (TaskId o : buf.observers) last_read = std::max(last_read, finish(o));
            Cycles next_def = s.tasks[*buf.definer].start + g.deadline;
            if (next_def < last_read)
                add(ViolationKind::WriteBeforeRead, buf.id,
                    "next slot redefines it at " + num(next_def) + " while reads run until " + num(last_read));
        }
    }
    return out;
}

std::string schedule_to_json(const SolveOutcome& outcome, const TaskGraph& g, const std::vector<Violation>& violations) {
    json j;
    j["status"] = to_string(outcome.status);
    j["deadline"] = g.deadline;
    if (!outcome.witness.empty()) j["witness"] = outcome.witness;
    j["nodes"] = outcome.stats.nodes;
    if (outcome.schedule) {
        const auto& s = *outcome.schedule;
        j["makespan"] = s.makespan;
        json tasks = json::array();
        for (TaskId t = 0; t < g.tasks.size(); ++t)
            tasks.push_back({{"id", g.tasks[t].id},
                             {"core", s.tasks[t].core},
                             {"start", s.tasks[t].start},
                             {"finish", s.tasks[t].start + g.tasks[t].runtime}});
        j["assignments"] = std::move(tasks);
        json tr = json::array();
        for (BufferId b = 0; b < g.buffers.size(); ++b)
            if (s.transfers[b])
                tr.push_back({{"buffer", g.buffers[b].id},
                              {"pattern", s.transfers[b]->pattern},
                              {"start", s.transfers[b]->start},
                              {"duration", s.transfers[b]->duration}});
        j["pattern_choices"] = std::move(tr);
    } else {
        j["makespan"] = nullptr;
    }
    json v = json::array();
    for (const auto& x : violations) v.push_back({{"kind", to_string(x.kind)}, {"subject", x.subject}, {"message", x.message}});
    j["violations"] = std::move(v);
    return j.dump(2) + "\n";
}

Schedule schedule_from_json(std::string_view text, const TaskGraph& g) {
    try {
        json j = json::parse(text);
        Schedule s;
        s.tasks.resize(g.tasks.size());
        s.transfers.resize(g.buffers.size());
        std::vector<char> seen(g.tasks.size(), 0);
        for (const auto& a : j.at("assignments")) {
            auto t = g.find_task(a.at("id").get<std::string>());
            if (!t) throw DiagnosticError("schedule: unknown task '" + a.at("id").get<std::string>() + "'");
            s.tasks[*t] = {a.at("core").get<std::string>(), a.at("start").get<Cycles>()};
            seen[*t] = 1;
        }
        for (TaskId t = 0; t < g.tasks.size(); ++t)
            if (!seen[t]) throw DiagnosticError("schedule: task '" + g.tasks[t].id + "' has no assignment");
        for (const auto& p : j.value("pattern_choices", json::array())) {
            auto b = g.find_buffer(p.at("buffer").get<std::string>());
            if (!b) throw DiagnosticError("schedule: unknown buffer '" + p.at("buffer").get<std::string>() + "'");
            s.transfers[*b] = Transfer{p.at("pattern").get<std::string>(), p.at("start").get<Cycles>(),
                                       p.at("duration").get<Cycles>()};
        }
        s.makespan = makespan_of(s, g);
        return s;
    } catch (const json::exception& e) {
        throw DiagnosticError(std::string("schedule: ") + e.what());
    }
}

}  // namespace ddtwin::sched
