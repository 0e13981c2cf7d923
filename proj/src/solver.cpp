#include <algorithm>
#include <chrono>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include "sched_model.hpp"

namespace ddtwin::sched {

using detail::Model;

const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::Feasible: return "feasible";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::Unknown: return "unknown";
    }
    return "?";
}

namespace {

constexpr Cycles kInf = std::numeric_limits<Cycles>::max() / 4;

struct Filters {
    bool deadline = true;
    bool buffer_deadlines = true;
    bool constraints = true;
    bool residency = true;
    bool lags = true;
};

// Pattern name with its core token blanked, so per-core variants line up.
std::string shape_key(const std::string& name) {
    auto canon = manifest::canonical_name(name);
    std::vector<std::string> toks;
    std::stringstream ss(canon);
    for (std::string t; std::getline(ss, t, '.');) toks.push_back(t);
    std::size_t at = (toks.size() > 1 && toks[0] == "big" && toks[1] == "delay") ? 2 : 1;
    if (at < toks.size()) toks[at] = "*";
    std::string out;
    for (const auto& t : toks) out += t + ".";
    return out;
}

// Cores that can be swapped without changing anything the search can see.
std::vector<int> core_classes(const Model& m) {
    std::vector<int> cls(m.nC);
    std::iota(cls.begin(), cls.end(), 0);
    std::vector<char> used(m.nP, 0);
    for (const auto& ps : m.buf_pats)
        for (int p : ps) used[p] = 1;
    std::vector<std::string> keys(m.nP);
    for (std::size_t p = 0; p < m.nP; ++p) keys[p] = shape_key(m.catalog->patterns()[p].name);

    auto swap_ok = [&](int a, int b) {
        if (m.core_l3[a] != m.core_l3[b]) return false;
        for (const auto& tc : m.task_cores) {
            bool ia = std::binary_search(tc.begin(), tc.end(), a);
            bool ib = std::binary_search(tc.begin(), tc.end(), b);
            if (ia != ib) return false;
        }
        std::vector<int> sigma(m.nP);
        for (std::size_t p = 0; p < m.nP; ++p) {
            sigma[p] = static_cast<int>(p);
            int pc = m.pat_core[p];
            if (pc != a && pc != b) continue;
            int want = pc == a ? b : a;
            sigma[p] = -1;
            for (std::size_t q = 0; q < m.nP; ++q)
                if (m.pat_core[q] == want && keys[q] == keys[p]) sigma[p] = static_cast<int>(q);
            if (sigma[p] < 0 && used[p]) return false;
        }
        auto sc = [&](int x) { return x == a ? b : x == b ? a : x; };
        for (std::size_t p = 0; p < m.nP; ++p) {
            if (!used[p]) continue;
            int s = sigma[p];
            if (!used[s] || m.pat_cls[p] != m.pat_cls[s] || m.pat_def_mem[p] != m.pat_def_mem[s] ||
                m.pat_obs_mem[p] != m.pat_obs_mem[s])
                return false;
            for (std::size_t x = 0; x < m.nC; ++x)
                if (m.pat_obs_ok[p][x] != m.pat_obs_ok[s][sc(static_cast<int>(x))]) return false;
            for (std::size_t q = 0; q < m.nP; ++q)
                if (used[q] && m.conflict[p][q] != m.conflict[s][sigma[q]]) return false;
        }
        for (const auto& ps : m.buf_pats) {
            std::vector<int> img;
            for (int p : ps) img.push_back(sigma[p]);
            std::vector<int> orig = ps;
            std::sort(img.begin(), img.end());
            std::sort(orig.begin(), orig.end());
            if (img != orig) return false;
        }
        return true;
    };
    for (std::size_t a = 0; a < m.nC; ++a)
        for (std::size_t b = a + 1; b < m.nC; ++b)
            if (cls[b] == static_cast<int>(b) && swap_ok(static_cast<int>(a), static_cast<int>(b)))
                cls[b] = cls[a];
    return cls;
}

class Search {
public:
    Search(const Model& m, const SolveOptions& opts, Filters f) : m_(m), opts_(opts), f_(f) { init(); }

    struct Result {
        bool complete = true;
        bool found = false;
        Cycles makespan = 0;
        detail::Occupancy best;
        SolveStats stats;
    };

    Result run() {
        started_ = std::chrono::steady_clock::now();
        Cycles D = m_.effective_deadline();
        incumbent_ = (f_.deadline && D >= 0) ? D + 1 : kInf;
        const bool heur = opts_.mode == SolveMode::Heuristic;
        // priority dive first for a good incumbent, then local search, then the exhaustive pass
        std::int64_t dive_budget = heur ? std::clamp<std::int64_t>(opts_.node_limit / 10, 1, 5'000)
                                        : std::min<std::int64_t>(opts_.node_limit, 20'000);
        dive_ = true;
        node_cap_ = dive_budget;
        dfs();
        bool dive_complete = !aborted_;
        if (!dive_complete && found_) {
            std::int64_t ls = heur ? opts_.node_limit - nodes_ : std::min<std::int64_t>(opts_.node_limit / 10, 20'000);
            local_search(ls);
        }
        aborted_ = !dive_complete;
        if (opts_.mode == SolveMode::Exact && !dive_complete) {
            aborted_ = false;
            dive_ = false;
            node_cap_ = opts_.node_limit;
            memo_.clear();
            dfs();
        }
        res_.complete = !aborted_;
        res_.found = found_;
        res_.makespan = found_ ? incumbent_ : 0;
        res_.stats.nodes = nodes_;
        res_.stats.memo_hits = memo_hits_;
        return std::move(res_);
    }

private:
    struct Child {
        TaskId t;
        int core;
        Cycles start;
        Cycles cost;
        std::vector<int> choice;  // index into buf_pats per output
    };

    void init() {
        const auto& g = *m_.graph;
        residency_on_ = m_.residency_needed && f_.residency;
        placed_.assign(m_.nT, 0);
        tcore_.assign(m_.nT, -1);
        tstart_.assign(m_.nT, 0);
        tfinish_.assign(m_.nT, 0);
        bpat_.assign(m_.nB, -1);
        bstart_.assign(m_.nB, 0);
        bend_.assign(m_.nB, 0);
        core_free_.assign(m_.nC, 0);
        iv_.assign(m_.nP, {});
        conflict_list_.assign(m_.nP, {});
        for (std::size_t p = 0; p < m_.nP; ++p)
            for (std::size_t q = 0; q < m_.nP; ++q)
                if (m_.conflict[p][q]) conflict_list_[p].push_back(static_cast<int>(q));
        sym_ = core_classes(m_);

        auto order = g.topological_order();
        if (!order) throw DiagnosticError("task graph is cyclic");
        topo_ = *order;
        tail_.assign(m_.nT, 0);
        for (auto it = topo_.rbegin(); it != topo_.rend(); ++it) {
            TaskId t = *it;
            Cycles best = 0;
            for (BufferId b : g.tasks[t].outputs) {
                Cycles after = 0;
                for (TaskId o : g.buffers[b].observers) after = std::max(after, tail_[o]);
                best = std::max(best, m_.buf_mindur[b] + after);
            }
            tail_[t] = g.tasks[t].runtime + best;
        }
        remaining_rt_ = 0;
        for (const auto& t : g.tasks) remaining_rt_ += t.runtime;

        // interchangeable patterns: same core, memories, observer rows and conflicts
        std::vector<int> rep(m_.nP);
        for (std::size_t p = 0; p < m_.nP; ++p) {
            rep[p] = static_cast<int>(p);
            for (std::size_t q = 0; q < p; ++q) {
                if (rep[q] != static_cast<int>(q)) continue;
                bool pipe_p = m_.pat_cls[p] == manifest::PatternClass::Pipeline;
                bool pipe_q = m_.pat_cls[q] == manifest::PatternClass::Pipeline;
                if (pipe_p != pipe_q || m_.pat_core[p] != m_.pat_core[q] || m_.pat_obs_ok[p] != m_.pat_obs_ok[q] ||
                    m_.pat_def_mem[p] != m_.pat_def_mem[q] || m_.pat_obs_mem[p] != m_.pat_obs_mem[q] ||
                    m_.conflict[p] != m_.conflict[q])
                    continue;
                rep[p] = static_cast<int>(q);
                break;
            }
        }

        // output options per (task, core)
        options_.assign(m_.nT, std::vector<std::vector<std::vector<int>>>(m_.nC));
        for (TaskId t = 0; t < m_.nT; ++t) {
            for (int c : m_.task_cores[t]) {
                auto& per_out = options_[t][c];
                for (BufferId b : g.tasks[t].outputs) {
                    std::vector<int> idx;
                    for (std::size_t i = 0; i < m_.buf_pats[b].size(); ++i) {
                        int p = m_.buf_pats[b][i];
                        if (!m_.definer_ok(p, c)) continue;
                        bool ok = true;
                        for (TaskId o : g.buffers[b].observers) {
                            bool any = false;
                            for (int oc : m_.task_cores[o]) any = any || m_.observer_ok(p, c, oc);
                            ok = ok && any;
                        }
                        if (!ok) continue;
                        bool dup = false;
                        for (int j : idx)
                            dup = dup || (rep[m_.buf_pats[b][j]] == rep[p] && m_.buf_dur[b][j] == m_.buf_dur[b][i]);
                        if (!dup) idx.push_back(static_cast<int>(i));
                    }
                    // cheaper first, then allowed-list order
                    std::stable_sort(idx.begin(), idx.end(),
                                     [&](int x, int y) { return m_.buf_dur[b][x] < m_.buf_dur[b][y]; });
                    per_out.push_back(std::move(idx));
                }
            }
        }
        // twins: swapping two of them (with their outputs) maps the instance to itself
        using Sig = std::vector<std::int64_t>;
        auto sig = [&](TaskId t) {
            const auto& task = g.tasks[t];
            Sig v{task.runtime, task.internalsize, m_.lag[t] ? *m_.lag[t] : -1};
            v.push_back(-1);
            for (int c : m_.task_cores[t]) v.push_back(c);
            std::vector<Sig> ins, outs;
            for (BufferId b : task.inputs) {
                const auto& buf = g.buffers[b];
                if (buf.external || !buf.definer) {
                    if (!buf.labels.empty()) return Sig{};
                    ins.push_back({0, buf.release});
                } else {
                    ins.push_back({1, static_cast<std::int64_t>(b)});
                }
            }
            for (BufferId b : task.outputs) {
                const auto& buf = g.buffers[b];
                if (!buf.labels.empty()) return Sig{};
                Sig o{buf.size, buf.deadline ? *buf.deadline : -1};
                for (int p : m_.buf_pats[b]) o.push_back(p);
                o.push_back(-1);
                std::vector<TaskId> obs(buf.observers.begin(), buf.observers.end());
                std::sort(obs.begin(), obs.end());
                for (TaskId x : obs) o.push_back(static_cast<std::int64_t>(x));
                outs.push_back(std::move(o));
            }
            std::sort(ins.begin(), ins.end());
            std::sort(outs.begin(), outs.end());
            for (const auto* group : {&ins, &outs}) {
                v.push_back(-2);
                for (const auto& x : *group) {
                    v.push_back(-3);
                    v.insert(v.end(), x.begin(), x.end());
                }
            }
            return v;
        };
        // only neighbours in id order: no third task can then sit between
        // two twins in the (start, id) tie-break
        twin_prev_.assign(m_.nT, -1);
        {
            Sig prev;
            for (TaskId t = 0; t < m_.nT; ++t) {
                Sig key = sig(t);
                if (!key.empty() && key == prev) twin_prev_[t] = static_cast<long>(t) - 1;
                prev = std::move(key);
            }
        }
        single_core_.assign(m_.nT, -1);
        for (TaskId t = 0; t < m_.nT; ++t)
            if (m_.task_cores[t].size() == 1) single_core_[t] = m_.task_cores[t][0];
        memo_on_ = !residency_on_ && (!f_.constraints || g.bound_constraints.empty());
    }

    bool out_of_budget() {
        if (nodes_ >= node_cap_) return true;
        if (opts_.time_limit_s && (nodes_ & 1023) == 0) {
            double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
            if (el > *opts_.time_limit_s) return true;
        }
        return false;
    }

    void reject(const char* why) { ++res_.stats.rejections[why]; }

    Cycles ready_of(TaskId t) const {
        const auto& g = *m_.graph;
        Cycles r = 0;
        for (BufferId b : g.tasks[t].inputs) {
            const auto& buf = g.buffers[b];
            r = std::max(r, (buf.external || !buf.definer) ? buf.release : bend_[b]);
        }
        return r;
    }

    bool available(TaskId t) const {
        const auto& g = *m_.graph;
        for (BufferId b : g.tasks[t].inputs) {
            const auto& buf = g.buffers[b];
            if (!buf.external && buf.definer && !placed_[*buf.definer]) return false;
        }
        return true;
    }

    // A guide steers a one-leaf dive: preferred pattern class per buffer,
    // task priority for equal starts, preferred core.
    struct Guide {
        std::vector<int> cls;
        std::vector<int> prio;
        std::vector<int> core;
        bool fixed_cores = false;  // false: earliest start wins, core only breaks ties
    };

    Guide guide_from(const detail::Occupancy& occ) const {
        Guide g;
        g.cls.assign(m_.nB, -1);
        for (BufferId b = 0; b < m_.nB; ++b)
            if (occ.buf_pat[b] >= 0) g.cls[b] = static_cast<int>(m_.pat_cls[occ.buf_pat[b]]);
        std::vector<TaskId> order(m_.nT);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](TaskId a, TaskId b) { return occ.task_start[a] < occ.task_start[b]; });
        g.prio.assign(m_.nT, 0);
        for (std::size_t i = 0; i < order.size(); ++i) g.prio[order[i]] = static_cast<int>(i);
        g.core = occ.task_core;
        return g;
    }

    void mutate(Guide& g, std::mt19937_64& rng, int moves) const {
        const auto& gr = *m_.graph;
        const int pipe = static_cast<int>(manifest::PatternClass::Pipeline);
        auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
        auto non_pipe = [&](BufferId b) {
            std::vector<int> v;
            for (int c : buf_classes_[b])
                if (c != pipe) v.push_back(c);
            return v.empty() ? g.cls[b] : v[pick(v.size())];
        };
        for (int k = 0; k < moves; ++k) {
            auto r = rng() % 100;
            if (r < 40) {
                // relocate a task, unpipelining whatever no longer shares its core
                TaskId t = pick(m_.nT);
                const auto& cs = m_.task_cores[t];
                if (cs.size() < 2) continue;
                int c = cs[pick(cs.size())];
                g.core[t] = c;
                for (BufferId b : gr.tasks[t].inputs) {
                    const auto& buf = gr.buffers[b];
                    if (!buf.external && buf.definer && g.core[*buf.definer] != c && g.cls[b] == pipe)
                        g.cls[b] = non_pipe(b);
                }
                for (BufferId b : gr.tasks[t].outputs) {
                    bool split = false;
                    for (TaskId o : gr.buffers[b].observers) split = split || g.core[o] != c;
                    if (split && g.cls[b] == pipe) g.cls[b] = non_pipe(b);
                }
            } else if (r < 65 && !flex_bufs_.empty()) {
                BufferId b = flex_bufs_[pick(flex_bufs_.size())];
                const auto& cl = buf_classes_[b];
                int c = cl[pick(cl.size())];
                if (c == g.cls[b]) c = cl[(std::find(cl.begin(), cl.end(), c) - cl.begin() + 1) % cl.size()];
                g.cls[b] = c;
                if (c == pipe && gr.buffers[b].definer)
                    for (TaskId o : gr.buffers[b].observers) g.core[o] = g.core[*gr.buffers[b].definer];
            } else if (r < 85 && m_.nT > 1) {
                // neighbours in priority order
                int p = static_cast<int>(pick(m_.nT - 1));
                auto x = std::find(g.prio.begin(), g.prio.end(), p) - g.prio.begin();
                auto y = std::find(g.prio.begin(), g.prio.end(), p + 1) - g.prio.begin();
                std::swap(g.prio[x], g.prio[y]);
            } else if (m_.nT > 1) {
                std::swap(g.prio[pick(m_.nT)], g.prio[pick(m_.nT)]);
            }
        }
    }

    // makespan of the first leaf under `g`, if any; the global best is kept
    std::optional<Cycles> guided(const Guide& g, Cycles accept_upto, std::int64_t cap) {
        Cycles keep = incumbent_;
        guide_ = &g;
        aborted_ = false;
        guided_leaf_.reset();
        bool memo = memo_on_;
        memo_on_ = false;
        incumbent_ = accept_upto + 1;
        node_cap_ = nodes_ + cap;
        dfs();
        memo_on_ = memo;
        guide_ = nullptr;
        aborted_ = false;
        incumbent_ = keep;
        if (!guided_leaf_) return std::nullopt;
        if (guided_leaf_->first < incumbent_) {
            incumbent_ = guided_leaf_->first;
            res_.best = std::move(guided_leaf_->second);
        }
        return guided_leaf_->first;
    }

    void local_search(std::int64_t budget) {
        if (budget <= 0) return;
        std::mt19937_64 rng(opts_.seed * 0x9E3779B97F4A7C15ULL + 0x51ED);
        buf_classes_.assign(m_.nB, {});
        flex_bufs_.clear();
        for (BufferId b = 0; b < m_.nB; ++b) {
            for (int p : m_.buf_pats[b]) {
                int c = static_cast<int>(m_.pat_cls[p]);
                if (std::find(buf_classes_[b].begin(), buf_classes_[b].end(), c) == buf_classes_[b].end())
                    buf_classes_[b].push_back(c);
            }
            std::sort(buf_classes_[b].begin(), buf_classes_[b].end());
            if (buf_classes_[b].size() > 1) flex_bufs_.push_back(b);
        }
        const std::int64_t cap = 4 * static_cast<std::int64_t>(m_.nT) + 16;
        // two phases: greedy decoding, then fixed core assignments
        for (int phase = 0; phase < 2; ++phase) {
            const std::int64_t end = nodes_ + (phase == 0 ? budget / 2 : budget - budget / 2);
            Guide cur = guide_from(res_.best);
            cur.fixed_cores = phase == 1;
            Cycles cur_val = incumbent_;
            int stale = 0;
            while (nodes_ < end) {
                if (opts_.time_limit_s &&
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count() >
                        *opts_.time_limit_s)
                    return;
                Guide next = cur;
                mutate(next, rng, stale > 100 ? 3 : 1);
                auto v = guided(next, cur_val, std::min(cap, end - nodes_));
                if (v && *v <= cur_val) {
                    if (*v < cur_val) stale = 0;
                    cur = std::move(next);
                    cur_val = *v;
                } else if (++stale > 400) {
                    cur = guide_from(res_.best);
                    cur.fixed_cores = phase == 1;
                    cur_val = incumbent_;
                    stale = 0;
                }
            }
        }
        aborted_ = false;
    }

    std::vector<Child> children() {
        const auto& g = *m_.graph;
        std::vector<Child> out;
        for (TaskId t = 0; t < m_.nT; ++t) {
            if (placed_[t] || !available(t)) continue;
            if (twin_prev_[t] >= 0 && !placed_[twin_prev_[t]]) continue;
            if (m_.task_cores[t].empty()) {
                reject("CORE");
                continue;
            }
            Cycles ready = ready_of(t);
            for (int c : m_.task_cores[t]) {
                if (core_free_[c] == 0) {
                    bool twin = false;
                    for (int c2 : m_.task_cores[t]) {
                        if (c2 >= c) break;
                        if (sym_[c2] == sym_[c] && core_free_[c2] == 0) twin = true;
                    }
                    if (twin) continue;
                }
                bool inputs_ok = true;
                for (BufferId b : g.tasks[t].inputs) {
                    const auto& buf = g.buffers[b];
                    if (buf.external || !buf.definer) continue;
                    if (!m_.observer_ok(bpat_[b], tcore_[*buf.definer], c)) inputs_ok = false;
                }
                if (!inputs_ok) {
                    reject("PATTERN");
                    continue;
                }
                Cycles start = std::max(ready, core_free_[c]);
                if (start < last_start_ || (start == last_start_ && static_cast<long>(t) < last_task_)) continue;
                if (f_.lags && m_.lag[t] && start - ready > *m_.lag[t]) {
                    reject("LAG");
                    continue;
                }
                const auto* opts_ptr = &options_[t][c];
                if (guide_) {
                    guided_opts_ = *opts_ptr;
                    const auto& outs = g.tasks[t].outputs;
                    for (std::size_t k = 0; k < outs.size(); ++k) {
                        int want = guide_->cls[outs[k]];
                        if (want < 0) continue;
                        std::vector<int> keep;
                        for (int i : guided_opts_[k])
                            if (static_cast<int>(m_.pat_cls[m_.buf_pats[outs[k]][i]]) == want) keep.push_back(i);
                        if (!keep.empty()) guided_opts_[k] = std::move(keep);
                    }
                    opts_ptr = &guided_opts_;
                }
                const auto& per_out = *opts_ptr;
                bool empty = false;
                for (const auto& o : per_out) empty = empty || o.empty();
                if (empty) {
                    reject("PATTERN");
                    continue;
                }
                std::vector<std::size_t> pos(per_out.size(), 0);
                for (bool done = false; !done;) {
                    Child ch{t, c, start, 0, {}};
                    for (std::size_t k = 0; k < per_out.size(); ++k) {
                        int i = per_out[k][pos[k]];
                        ch.choice.push_back(i);
                        ch.cost += m_.buf_dur[g.tasks[t].outputs[k]][i];
                    }
                    if (observers_placeable(t, c, ch.choice)) out.push_back(std::move(ch));
                    else reject("PATTERN");
                    done = true;
                    for (std::size_t k = per_out.size(); k-- > 0;) {
                        if (++pos[k] < per_out[k].size()) {
                            done = false;
                            break;
                        }
                        pos[k] = 0;
                    }
                }
            }
        }
        if (guide_) {
            const auto& gd = *guide_;
            std::stable_sort(out.begin(), out.end(), [&](const Child& a, const Child& b) {
                bool ma = gd.fixed_cores && a.core != gd.core[a.t], mb = gd.fixed_cores && b.core != gd.core[b.t];
                return std::tuple(ma, a.start, gd.prio[a.t], a.core != gd.core[a.t], a.cost, a.core, a.choice, a.t) <
                       std::tuple(mb, b.start, gd.prio[b.t], b.core != gd.core[b.t], b.cost, b.core, b.choice, b.t);
            });
        } else if (dive_) {
            std::stable_sort(out.begin(), out.end(), [&](const Child& a, const Child& b) {
                return std::tuple(a.start, -tail_[a.t], a.cost, a.core, a.choice, a.t) <
                       std::tuple(b.start, -tail_[b.t], b.cost, b.core, b.choice, b.t);
            });
        } else {
            std::stable_sort(out.begin(), out.end(), [&](const Child& a, const Child& b) {
                return std::tuple(a.start, a.core, a.cost, a.choice, a.t) <
                       std::tuple(b.start, b.core, b.cost, b.choice, b.t);
            });
        }
        return out;
    }

    // Every unplaced reader of t's outputs keeps at least one core that all of
    // its placed inputs (plus this choice) can be observed from.
    bool observers_placeable(TaskId t, int c, const std::vector<int>& choice) const {
        const auto& g = *m_.graph;
        const auto& outs = g.tasks[t].outputs;
        for (std::size_t k = 0; k < outs.size(); ++k) {
            int p = m_.buf_pats[outs[k]][choice[k]];
            for (TaskId o : g.buffers[outs[k]].observers) {
                if (placed_[o]) continue;
                bool any = false;
                for (int oc : m_.task_cores[o]) {
                    if (!m_.observer_ok(p, c, oc)) continue;
                    bool ok = true;
                    for (BufferId b : g.tasks[o].inputs) {
                        const auto& buf = g.buffers[b];
                        if (buf.external || !buf.definer || !placed_[*buf.definer]) continue;
                        if (!m_.observer_ok(bpat_[b], tcore_[*buf.definer], oc)) {
                            ok = false;
                            break;
                        }
                    }
                    if (ok) {
                        any = true;
                        break;
                    }
                }
                if (!any) return false;
            }
        }
        return true;
    }

    Cycles earliest(int p, Cycles from, Cycles d) {
        if (d == 0) return from;
        scratch_.clear();
        for (int q : conflict_list_[p])
            for (const auto& iv : iv_[q]) scratch_.push_back(iv);
        std::sort(scratch_.begin(), scratch_.end());
        Cycles s = from;
        for (const auto& [a, e] : scratch_) {
            if (a >= s + d) break;
            if (e > s) s = e;
        }
        return s;
    }

    struct Undo {
        Cycles core_free, last_start, pm;
        long last_task;
    };

    // false when a buffer deadline fails; state is then already restored
    bool apply(const Child& ch, Undo& u) {
        const auto& g = *m_.graph;
        const auto& task = g.tasks[ch.t];
        u = {core_free_[ch.core], last_start_, pm_, last_task_};
        placed_[ch.t] = 1;
        tcore_[ch.t] = ch.core;
        tstart_[ch.t] = ch.start;
        tfinish_[ch.t] = ch.start + task.runtime;
        core_free_[ch.core] = tfinish_[ch.t];
        last_start_ = ch.start;
        last_task_ = static_cast<long>(ch.t);
        pm_ = std::max(pm_, tfinish_[ch.t]);
        remaining_rt_ -= task.runtime;
        for (std::size_t k = 0; k < task.outputs.size(); ++k) {
            BufferId b = task.outputs[k];
            int p = m_.buf_pats[b][ch.choice[k]];
            Cycles d = m_.buf_dur[b][ch.choice[k]];
            Cycles s = earliest(p, tfinish_[ch.t], d);
            bpat_[b] = p;
            bstart_[b] = s;
            bend_[b] = s + d;
            if (d > 0) iv_[p].emplace_back(s, s + d);
            pm_ = std::max(pm_, s + d);
            const auto& dl = g.buffers[b].deadline;
            if (f_.buffer_deadlines && dl && bend_[b] > *dl) {
                reject("BUFFER_DEADLINE");
                revert(ch, u, k + 1);
                return false;
            }
        }
        return true;
    }

    void revert(const Child& ch, const Undo& u, std::size_t nout) {
        const auto& task = m_.graph->tasks[ch.t];
        for (std::size_t k = nout; k-- > 0;) {
            BufferId b = task.outputs[k];
            int p = bpat_[b];
            if (bend_[b] > bstart_[b]) iv_[p].pop_back();
            bpat_[b] = -1;
        }
        placed_[ch.t] = 0;
        tcore_[ch.t] = -1;
        core_free_[ch.core] = u.core_free;
        last_start_ = u.last_start;
        last_task_ = u.last_task;
        pm_ = u.pm;
        remaining_rt_ += task.runtime;
    }

    Cycles lower_bound() {
        const auto& g = *m_.graph;
        Cycles lb = pm_;
        est_.assign(m_.nT, 0);
        for (TaskId t : topo_) {
            if (placed_[t]) continue;
            Cycles e = std::max<Cycles>(last_start_, 0);
            Cycles mcf = kInf;
            for (int c : m_.task_cores[t]) mcf = std::min(mcf, core_free_[c]);
            if (mcf != kInf) e = std::max(e, mcf);
            for (BufferId b : g.tasks[t].inputs) {
                const auto& buf = g.buffers[b];
                if (buf.external || !buf.definer) e = std::max(e, buf.release);
                else if (placed_[*buf.definer]) e = std::max(e, bend_[b]);
                else e = std::max(e, est_[*buf.definer] + g.tasks[*buf.definer].runtime + m_.buf_mindur[b]);
            }
            est_[t] = e;
            lb = std::max(lb, e + tail_[t]);
        }
        if (m_.nC > 0) {
            Cycles sum = remaining_rt_;
            for (Cycles f : core_free_) sum += f;
            Cycles n = static_cast<Cycles>(m_.nC);
            lb = std::max(lb, (sum + n - 1) / n);
        }
        pinned_.assign(m_.nC, 0);
        bool any = false;
        for (TaskId t = 0; t < m_.nT; ++t)
            if (!placed_[t] && single_core_[t] >= 0) pinned_[single_core_[t]] += g.tasks[t].runtime, any = true;
        if (any)
            for (std::size_t c = 0; c < m_.nC; ++c)
                if (pinned_[c] > 0) lb = std::max(lb, core_free_[c] + pinned_[c]);
        return lb;
    }

    std::string memo_key() const {
        std::string k;
        auto put = [&](std::int64_t v) { k.append(reinterpret_cast<const char*>(&v), sizeof v); };
        for (std::size_t t = 0; t < m_.nT; ++t) k.push_back(placed_[t] ? '1' : '0');
        for (Cycles f : core_free_) put(f);
        put(last_start_);
        put(last_task_);
        put(pm_);
        const auto& g = *m_.graph;
        for (BufferId b = 0; b < m_.nB; ++b) {
            if (bpat_[b] < 0) continue;
            bool pending = false;
            for (TaskId o : g.buffers[b].observers) pending = pending || !placed_[o];
            if (!pending) continue;
            put(static_cast<std::int64_t>(b));
            put(bpat_[b]);
            put(bend_[b]);
        }
        put(-1);
        for (std::size_t p = 0; p < m_.nP; ++p)
            for (const auto& [a, e] : iv_[p])
                if (e > last_start_) {
                    put(static_cast<std::int64_t>(p));
                    put(a);
                    put(e);
                }
        return k;
    }

    void leaf() {
        const auto& g = *m_.graph;
        Cycles D = m_.effective_deadline();
        if (f_.deadline && D >= 0 && pm_ > D) {
            reject("DEADLINE");
            return;
        }
        if (pm_ >= incumbent_) return;
        detail::Occupancy occ{tcore_, tstart_, tfinish_, bpat_, bstart_, bend_};
        if (residency_on_ && detail::find_overflow(m_, occ)) {
            reject("RESIDENCY");
            return;
        }
        if (f_.constraints && !g.bound_constraints.empty() &&
            detail::failing_constraint(g, detail::derive_symbols(g, occ, pm_))) {
            reject("CONSTRAINT");
            return;
        }
        if (guide_) {
            guided_leaf_.emplace(pm_, std::move(occ));
            aborted_ = true;
            return;
        }
        incumbent_ = pm_;
        found_ = true;
        res_.best = std::move(occ);
    }

    void dfs() {
        if (aborted_) return;
        if (placed_count_ == m_.nT) {
            leaf();
            return;
        }
        if (out_of_budget()) {
            aborted_ = true;
            return;
        }
        ++nodes_;
        auto kids = children();
        for (const auto& ch : kids) {
            if (aborted_) return;
            Undo u;
            if (!apply(ch, u)) continue;
            ++placed_count_;
            bool go = lower_bound() < incumbent_;
            if (go && memo_on_ && placed_count_ < m_.nT) {
                if (!memo_.insert(memo_key()).second) {
                    ++memo_hits_;
                    go = false;
                } else if (memo_.size() > 3'000'000) {
                    memo_.clear();
                }
            }
            if (go) dfs();
            --placed_count_;
            revert(ch, u, m_.graph->tasks[ch.t].outputs.size());
        }
    }

    const Model& m_;
    SolveOptions opts_;
    Filters f_;
    Result res_;
    std::chrono::steady_clock::time_point started_;

    std::vector<char> placed_;
    std::size_t placed_count_ = 0;
    std::vector<int> tcore_;
    std::vector<Cycles> tstart_, tfinish_;
    std::vector<int> bpat_;
    std::vector<Cycles> bstart_, bend_;
    std::vector<Cycles> core_free_;
    std::vector<std::vector<std::pair<Cycles, Cycles>>> iv_;
    std::vector<std::vector<int>> conflict_list_;
    std::vector<std::pair<Cycles, Cycles>> scratch_;
    Cycles last_start_ = -1;
    long last_task_ = -1;
    Cycles pm_ = 0;
    Cycles remaining_rt_ = 0;

    std::vector<int> sym_;
    std::vector<TaskId> topo_;
    std::vector<Cycles> tail_, est_, pinned_;
    std::vector<int> single_core_;
    std::vector<long> twin_prev_;
    bool residency_on_ = false;
    std::vector<std::vector<std::vector<std::vector<int>>>> options_;

    const Guide* guide_ = nullptr;
    std::vector<std::vector<int>> guided_opts_;
    std::optional<std::pair<Cycles, detail::Occupancy>> guided_leaf_;
    std::vector<std::vector<int>> buf_classes_;
    std::vector<BufferId> flex_bufs_;

    bool dive_ = false;
    bool aborted_ = false;
    bool found_ = false;
    bool memo_on_ = false;
    Cycles incumbent_ = kInf;
    std::int64_t nodes_ = 0, node_cap_ = 0, memo_hits_ = 0;
    std::unordered_set<std::string> memo_;
};

Schedule to_schedule(const Model& m, const detail::Occupancy& occ, Cycles makespan) {
    Schedule s;
    for (TaskId t = 0; t < m.nT; ++t) s.tasks.push_back({m.topo->cores[occ.task_core[t]].id, occ.task_start[t]});
    s.transfers.resize(m.nB);
    for (BufferId b = 0; b < m.nB; ++b) {
        if (occ.buf_pat[b] < 0) continue;
        s.transfers[b] = Transfer{m.catalog->patterns()[occ.buf_pat[b]].name, occ.buf_start[b],
                                  occ.buf_end[b] - occ.buf_start[b]};
    }
    s.makespan = makespan;
    return s;
}

void merge(SolveStats& into, const SolveStats& from) {
    into.nodes += from.nodes;
    into.memo_hits += from.memo_hits;
    for (const auto& [k, v] : from.rejections) into.rejections[k] += v;
}

}  // namespace

SolveOutcome solve_best_case(const TaskGraph& graph, const manifest::HardwareTopology& topo,
                             const manifest::PatternCatalog& catalog, const SolveOptions& opts) {
    Model m = detail::build_model(graph, topo, catalog);
    SolveOutcome out;
    if (m.nT == 0) {
        out.status = SolveStatus::Optimal;
        out.schedule = Schedule{{}, std::vector<std::optional<Transfer>>(m.nB), 0};
        return out;
    }
    Search main(m, opts, Filters{});
    auto r = main.run();
    out.stats = r.stats;
    if (r.found) {
        out.schedule = to_schedule(m, r.best, r.makespan);
        out.status = r.complete ? SolveStatus::Optimal : (opts.mode == SolveMode::Heuristic ? SolveStatus::Feasible
                                                                                           : SolveStatus::Unknown);
        return out;
    }
    if (!r.complete) {
        out.status = SolveStatus::Unknown;
        out.witness = "search budget exhausted";
        return out;
    }
    out.status = SolveStatus::Infeasible;
    if (!opts.explain) return out;

    SolveOptions sub = opts;
    sub.explain = false;
    Search relaxed(m, sub, Filters{false, false, false});
    auto r0 = relaxed.run();
    merge(out.stats, r0.stats);
    if (!r0.complete) {
        out.witness = "UNDETERMINED";
        return out;
    }
    if (!r0.found) {
        // drop one structural filter at a time
        const std::pair<const char*, Filters> probes[] = {
            {"RESIDENCY", Filters{false, false, false, false, true}},
            {"LAG", Filters{false, false, false, true, false}},
            {"LAG", Filters{false, false, false, false, false}},
        };
        for (const auto& [name, f] : probes) {
            Search probe(m, sub, f);
            auto rp = probe.run();
            merge(out.stats, rp.stats);
            if (!rp.complete) {
                out.witness = "UNDETERMINED";
                return out;
            }
            if (rp.found) {
                out.witness = name;
                return out;
            }
        }
        out.witness = out.stats.rejections.count("CORE") ? "CORE" : "PATTERN";
        return out;
    }
    Cycles D = m.effective_deadline();
    if (D >= 0 && r0.makespan > D) {
        out.witness = "DEADLINE";
        return out;
    }
    Search timed(m, sub, Filters{true, true, false});
    auto r1 = timed.run();
    merge(out.stats, r1.stats);
    if (!r1.complete) {
        out.witness = "UNDETERMINED";
    } else if (!r1.found) {
        out.witness = "DEADLINE";
        for (BufferId b = 0; b < m.nB; ++b) {
            const auto& dl = graph.buffers[b].deadline;
            if (dl && r0.best.buf_pat[b] >= 0 && r0.best.buf_end[b] > *dl) {
                out.witness = "BUFFER_DEADLINE:" + graph.buffers[b].id;
                break;
            }
        }
    } else {
        auto name = detail::failing_constraint(graph, detail::derive_symbols(graph, r1.best, r1.makespan));
        out.witness = "CONSTRAINT:" + (name ? *name : graph.bound_constraints.front().name);
    }
    return out;
}

}  // namespace ddtwin::sched
