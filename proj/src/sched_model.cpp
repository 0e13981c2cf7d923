#include "sched_model.hpp"

#include <algorithm>

namespace ddtwin::sched::detail {

using manifest::MemoryLevel;
using manifest::PatternClass;

Cycles Model::duration(int pat, BufferId b) const {
    const auto& pats = buf_pats[b];
    for (std::size_t i = 0; i < pats.size(); ++i)
        if (pats[i] == pat) return buf_dur[b][i];
    return manifest::transfer_cost(pat_cls[pat], graph->buffers[b].size, *topo);
}

Model build_model(const TaskGraph& g, const manifest::HardwareTopology& topo, const manifest::PatternCatalog& catalog) {
    Model m;
    m.graph = &g;
    m.topo = &topo;
    m.catalog = &catalog;
    m.nT = g.tasks.size();
    m.nB = g.buffers.size();
    m.nC = topo.cores.size();
    m.nP = catalog.size();

    auto mem_index = [&](const std::string& id) -> int {
        for (std::size_t i = 0; i < topo.memories.size(); ++i)
            if (topo.memories[i].id == id) return static_cast<int>(i);
        return -1;
    };
    for (const auto& c : topo.cores) m.core_l3.push_back(mem_index(c.l3));

    std::vector<std::string> core_tokens;
    for (const auto& c : topo.cores) core_tokens.push_back(manifest::canonical_name(c.id));

    const auto& pats = catalog.patterns();
    m.pat_cls.resize(m.nP);
    m.pat_core.resize(m.nP, kNoCore);
    m.pat_obs_ok.assign(m.nP, std::vector<char>(m.nC, 0));
    m.pat_def_mem.resize(m.nP);
    m.pat_obs_mem.resize(m.nP);
    for (std::size_t p = 0; p < m.nP; ++p) {
        auto tr = manifest::classify_pattern(pats[p].name);
        if (!tr) throw DiagnosticError("pattern '" + pats[p].name + "' has no known class (pipeline, L2toL2, big_delay)");
        m.pat_cls[p] = tr->cls;
        if (tr->core) {
            auto it = std::find(core_tokens.begin(), core_tokens.end(), *tr->core);
            m.pat_core[p] = it == core_tokens.end() ? kForeignCore : static_cast<int>(it - core_tokens.begin());
        }
        m.pat_def_mem[p] = mem_index(pats[p].defining_memory);
        m.pat_obs_mem[p] = mem_index(pats[p].observing_memory);
        const auto* obs = topo.find_memory(pats[p].observing_memory);
        for (std::size_t c = 0; c < m.nC; ++c) {
            const auto& core = topo.cores[c];
            m.pat_obs_ok[p][c] = obs && (obs->level == MemoryLevel::DDR || obs->id == core.l2 || obs->id == core.l3);
        }
    }

    m.conflict.assign(m.nP, std::vector<char>(m.nP, 0));
    auto link = [&](std::size_t p, const std::vector<std::string>& names) {
        for (const auto& n : names)
            if (auto q = catalog.index_of(n)) m.conflict[p][*q] = m.conflict[*q][p] = 1;
    };
    for (std::size_t p = 0; p < m.nP; ++p) {
        link(p, pats[p].exclusive_define_with);
        for (const auto& s : pats[p].shares) link(p, s);
    }

    m.task_cores.resize(m.nT);
    m.lag.resize(m.nT);
    for (TaskId t = 0; t < m.nT; ++t) {
        const auto& task = g.tasks[t];
        if (task.runtime <= 0) throw DiagnosticError("task '" + task.id + "' has non-positive runtime");
        if (task.allowed_cores.empty()) {
            for (std::size_t c = 0; c < m.nC; ++c) m.task_cores[t].push_back(static_cast<int>(c));
        } else {
            for (const auto& id : task.allowed_cores) {
                auto c = topo.core_index(id);
                if (!c) throw DiagnosticError("task '" + task.id + "' allows unknown core '" + id + "'");
                m.task_cores[t].push_back(static_cast<int>(*c));
            }
            std::sort(m.task_cores[t].begin(), m.task_cores[t].end());
            m.task_cores[t].erase(std::unique(m.task_cores[t].begin(), m.task_cores[t].end()), m.task_cores[t].end());
        }
        m.lag[t] = task.max_start_lag ? task.max_start_lag : g.max_start_lag;
    }

    m.buf_pats.resize(m.nB);
    m.buf_dur.resize(m.nB);
    m.buf_mindur.assign(m.nB, 0);
    for (BufferId b = 0; b < m.nB; ++b) {
        const auto& buf = g.buffers[b];
        if (buf.external || !buf.definer) continue;
        for (const auto& name : buf.allowed_patterns) {
            auto p = catalog.index_of(name);
            if (!p) throw DiagnosticError("buffer '" + buf.id + "' allows unknown pattern '" + name + "'");
            if (std::find(m.buf_pats[b].begin(), m.buf_pats[b].end(), static_cast<int>(*p)) != m.buf_pats[b].end())
                continue;
            m.buf_pats[b].push_back(static_cast<int>(*p));
            m.buf_dur[b].push_back(manifest::transfer_cost(m.pat_cls[*p], buf.size, topo));
        }
        if (m.buf_pats[b].empty()) throw DiagnosticError("buffer '" + buf.id + "' has no allowed pattern");
        m.buf_mindur[b] = *std::min_element(m.buf_dur[b].begin(), m.buf_dur[b].end());
    }

    // Residency can only bind when everything that might land in a memory
    // exceeds its capacity.
    std::vector<Bytes> worst(topo.memories.size(), 0);
    for (BufferId b = 0; b < m.nB; ++b) {
        std::vector<int> mems;
        for (int p : m.buf_pats[b]) {
            if (m.pat_obs_mem[p] >= 0) mems.push_back(m.pat_obs_mem[p]);
            if (m.pat_def_mem[p] >= 0) mems.push_back(m.pat_def_mem[p]);
        }
        std::sort(mems.begin(), mems.end());
        mems.erase(std::unique(mems.begin(), mems.end()), mems.end());
        for (int mem : mems) worst[mem] += g.buffers[b].size;
    }
    for (TaskId t = 0; t < m.nT; ++t) {
        std::vector<int> mems;
        for (int c : m.task_cores[t])
            if (m.core_l3[c] >= 0) mems.push_back(m.core_l3[c]);
        std::sort(mems.begin(), mems.end());
        mems.erase(std::unique(mems.begin(), mems.end()), mems.end());
        for (int mem : mems) worst[mem] += g.tasks[t].internalsize;
    }
    for (std::size_t i = 0; i < worst.size(); ++i)
        if (topo.memories[i].capacity > 0 && worst[i] > topo.memories[i].capacity) m.residency_needed = true;
    return m;
}

std::optional<Overflow> find_overflow(const Model& m, const Occupancy& occ) {
    const auto& g = *m.graph;
    const std::size_t nM = m.topo->memories.size();
    // (time, +/-size) events per memory; releases sort before acquisitions at equal times
    std::vector<std::vector<std::pair<Cycles, Bytes>>> ev(nM);
    auto add = [&](int mem, Cycles from, Cycles to, Bytes size) {
        if (mem < 0 || size <= 0 || to <= from) return;
        ev[mem].emplace_back(from, size);
        ev[mem].emplace_back(to, -size);
    };
    for (BufferId b = 0; b < m.nB; ++b) {
        int p = occ.buf_pat[b];
        const auto& buf = g.buffers[b];
        if (p < 0 || !buf.definer) continue;
        Cycles from = occ.task_start[*buf.definer];
        Cycles until = occ.buf_end[b];
        for (TaskId o : buf.observers) until = std::max(until, occ.task_finish[o]);
        add(m.pat_obs_mem[p], from, until, buf.size);
        if (m.pat_def_mem[p] != m.pat_obs_mem[p]) add(m.pat_def_mem[p], from, occ.buf_end[b], buf.size);
    }
    for (TaskId t = 0; t < m.nT; ++t) {
        int c = occ.task_core[t];
        if (c < 0) continue;
        add(m.core_l3[c], occ.task_start[t], occ.task_finish[t], g.tasks[t].internalsize);
    }
    for (std::size_t mem = 0; mem < nM; ++mem) {
        Bytes cap = m.topo->memories[mem].capacity;
        if (cap <= 0 || ev[mem].empty()) continue;
        std::sort(ev[mem].begin(), ev[mem].end());
        Bytes load = 0;
        for (const auto& [at, delta] : ev[mem]) {
            load += delta;
            if (load > cap) return Overflow{m.topo->memories[mem].id, at, load, cap};
        }
    }
    return std::nullopt;
}

std::map<std::string, std::int64_t> derive_symbols(const TaskGraph& g, const Occupancy& occ, Cycles makespan) {
    std::map<std::string, std::int64_t> s = g.assignments;
    for (BufferId b = 0; b < g.buffers.size(); ++b) {
        const auto& buf = g.buffers[b];
        Cycles done = buf.external || occ.buf_pat[b] < 0 ? buf.release : occ.buf_end[b];
        for (const auto& l : buf.labels) {
            auto [it, fresh] = s.emplace(l, done);
            if (!fresh) it->second = std::max(it->second, done);
        }
    }
    s[g.slot_symbol] = g.deadline;
    s["makespan"] = makespan;
    return s;
}

std::optional<std::string> failing_constraint(const TaskGraph& g, const std::map<std::string, std::int64_t>& symbols) {
    for (const auto& c : g.bound_constraints) {
        try {
            if (!manifest::evaluate_timing_equation(c, symbols)) return c.name;
        } catch (const DiagnosticError&) {
            return c.name;
        }
    }
    return std::nullopt;
}

}  // namespace ddtwin::sched::detail
