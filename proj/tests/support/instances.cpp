#include "instances.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace ddtwin::testkit {

namespace {

struct Rng {
    std::mt19937_64 g;
    explicit Rng(std::uint64_t seed) : g(seed) {}
    std::int64_t in(std::int64_t lo, std::int64_t hi) { return std::uniform_int_distribution<std::int64_t>(lo, hi)(g); }
    bool chance(int pct) { return in(0, 99) < pct; }
};

}  // namespace

manifest::HardwareTopology small_topology(int cores, Bytes l3_capacity) {
    manifest::HardwareTopology t;
    for (int c = 0; c < cores; ++c)
        t.memories.push_back({"L2_" + std::to_string(c), manifest::MemoryLevel::L2, 1 << 20, 64, 0});
    t.memories.push_back({"L3_0", manifest::MemoryLevel::L3, l3_capacity, 32, 0});
    t.memories.push_back({"DDR_0", manifest::MemoryLevel::DDR, Bytes{1} << 34, 16, 1000});
    for (int c = 0; c < cores; ++c)
        t.cores.push_back({"c_" + std::to_string(c), "L2_" + std::to_string(c), "L3_0"});
    t.pattern_costs[manifest::PatternClass::Pipeline] = {0, std::nullopt};
    t.pattern_costs[manifest::PatternClass::L2toL2] = {20, 64};
    t.pattern_costs[manifest::PatternClass::BigDelay] = {100, 16};
    return t;
}

Instance random_instance(std::uint64_t seed, const GenParams& p) {
    Rng r(seed * 0x9e3779b97f4a7c15ULL + 17);
    Instance in;
    in.topo = small_topology(p.cores);
    in.catalog = manifest::generate_patterns_from_topology(in.topo);
    auto& g = in.graph;
    const auto& pats = in.catalog.patterns();

    int n = static_cast<int>(r.in(p.min_tasks, p.max_tasks));
    // mostly patterns of one home core so that a task's outputs agree
    auto pick_patterns = [&](int home) {
        std::vector<std::string> mine, all;
        for (const auto& x : pats) {
            all.push_back(x.name);
            if (auto c = manifest::classify_pattern(x.name); c && c->core == "c#" + std::to_string(home))
                mine.push_back(x.name);
        }
        auto& from = r.chance(90) ? mine : all;
        std::shuffle(from.begin(), from.end(), r.g);
        from.resize(std::min<std::size_t>(from.size(), static_cast<std::size_t>(r.in(1, p.max_patterns))));
        return from;
    };

    // a couple of external inputs
    int n_ext = static_cast<int>(r.in(0, 2));
    for (int e = 0; e < n_ext; ++e) {
        elab::Buffer b;
        b.id = "ext" + std::to_string(e);
        b.external = true;
        b.release = r.chance(40) ? r.in(1, 20) * 50 : 0;
        b.size = r.in(1, 64) * 256;
        g.buffers.push_back(std::move(b));
    }

    std::vector<int> homes;
    std::map<elab::BufferId, elab::BufferId> clone_of;
    for (int t = 0; t < n;) {
        elab::TaskInstance task;
        task.id = "t" + std::to_string(t);
        task.function = "f" + std::to_string(r.in(0, 2));
        task.runtime = r.in(1, 40) * 50;
        task.internalsize = r.chance(50) ? r.in(1, 32) * 1024 : 0;
        task.group = "grp" + std::to_string(t % 3);

        // inputs: some earlier non-external buffers, some externals
        std::vector<elab::BufferId> pool;
        for (elab::BufferId b = 0; b < g.buffers.size(); ++b) pool.push_back(b);
        std::shuffle(pool.begin(), pool.end(), r.g);
        int want = static_cast<int>(r.in(0, 2));
        for (auto b : pool) {
            if (want == 0) break;
            task.inputs.push_back(b);
            --want;
        }
        int home = static_cast<int>(r.in(0, p.cores - 1));
        for (auto b : task.inputs)
            if (g.buffers[b].definer && r.chance(70)) home = homes[*g.buffers[b].definer];
        homes.push_back(home);
        int outs = static_cast<int>(r.in(t + 1 < n ? 1 : 0, 2));
        for (int k = 0; k < outs; ++k) {
            elab::Buffer b;
            b.id = task.id + ".o" + std::to_string(k);
            b.definer = static_cast<elab::TaskId>(t);
            b.size = r.in(1, 128) * 512;
            b.allowed_patterns = pick_patterns(home);
            task.outputs.push_back(g.buffers.size());
            g.buffers.push_back(std::move(b));
        }
        g.tasks.push_back(std::move(task));
        ++t;
        // sometimes a twin right after it: same inputs, cloned outputs
        if (t < n && r.chance(30)) {
            elab::TaskInstance twin = g.tasks.back();
            twin.id = "t" + std::to_string(t);
            twin.outputs.clear();
            for (auto b : g.tasks.back().outputs) {
                elab::Buffer copy = g.buffers[b];
                copy.id = twin.id + copy.id.substr(copy.id.find('.'));
                copy.definer = static_cast<elab::TaskId>(t);
                clone_of[b] = g.buffers.size();
                twin.outputs.push_back(g.buffers.size());
                g.buffers.push_back(std::move(copy));
            }
            g.tasks.push_back(std::move(twin));
            homes.push_back(homes.back());
            ++t;
        }
    }
    // readers of an original also read its clone
    for (auto& task : g.tasks) {
        std::vector<elab::BufferId> extra;
        for (auto b : task.inputs)
            if (auto it = clone_of.find(b); it != clone_of.end() &&
                std::find(task.inputs.begin(), task.inputs.end(), it->second) == task.inputs.end())
                extra.push_back(it->second);
        task.inputs.insert(task.inputs.end(), extra.begin(), extra.end());
    }
    g.rebuild_observers();

    if (p.constraints) {
        if (r.chance(20)) g.max_start_lag = r.in(2, 20) * 100;
        for (std::size_t t = 0; t < g.tasks.size(); ++t) {
            if (r.chance(10)) g.tasks[t].max_start_lag = r.in(0, 10) * 100;
            if (r.chance(10)) {
                int c = r.chance(80) ? homes[t] : static_cast<int>(r.in(0, p.cores - 1));
                g.tasks[t].allowed_cores = {in.topo.cores[static_cast<std::size_t>(c)].id};
            }
        }
        for (auto& b : g.buffers)
            if (!b.external && r.chance(6)) b.deadline = r.in(10, 80) * 100;
        if (r.chance(30)) g.deadline = r.in(20, 120) * 100;
        if (r.chance(15)) {
            // label a buffer and bound its completion against the makespan
            for (auto& b : g.buffers) {
                if (b.external || !b.definer) continue;
                b.labels.push_back("lab");
                manifest::TimingEquationDoc d;
                d.name = "LabelBound";
                d.equation_text = "A + " + std::to_string(r.in(0, 20) * 100) + " >= M";
                d.equation = manifest::parse_equation(d.equation_text);
                d.bindings = {{"A", "lab"}, {"M", "makespan"}};
                g.bound_constraints.push_back(std::move(d));
                break;
            }
        }
    }
    if (p.residency && r.chance(25)) {
        Bytes total = 0;
        for (const auto& b : g.buffers) total += b.size;
        for (auto& m : in.topo.memories)
            if (m.level == manifest::MemoryLevel::L3) m.capacity = std::max<Bytes>(64 * 1024, total * 3 / r.in(4, 5));
    }
    return in;
}

elab::TaskGraph tighten(const Instance& in, std::uint64_t seed, Cycles reference) {
    Rng r(seed * 0xbf58476d1ce4e5b9ULL + 3);
    elab::TaskGraph g = in.graph;
    int steps = static_cast<int>(r.in(1, 3));
    // bounds in tenths of a reference makespan (summed runtimes without one)
    Cycles unit = reference / 10;
    if (reference <= 0) {
        for (const auto& t : g.tasks) unit += t.runtime;
        unit /= 20;
    }
    unit = std::max<Cycles>(unit, 1);
    for (int s = 0; s < steps; ++s) {
        switch (r.in(0, 5)) {
            case 0: {  // drop a pattern
                std::vector<elab::Buffer*> cand;
                for (auto& b : g.buffers)
                    if (b.allowed_patterns.size() > 1) cand.push_back(&b);
                if (cand.empty()) break;
                auto* b = cand[static_cast<std::size_t>(r.in(0, static_cast<std::int64_t>(cand.size()) - 1))];
                b->allowed_patterns.erase(b->allowed_patterns.begin() +
                                          r.in(0, static_cast<std::int64_t>(b->allowed_patterns.size()) - 1));
                break;
            }
            case 1: {  // pin a task
                auto& t = g.tasks[static_cast<std::size_t>(r.in(0, static_cast<std::int64_t>(g.tasks.size()) - 1))];
                std::vector<std::string> cores = t.allowed_cores;
                if (cores.empty())
                    for (const auto& c : in.topo.cores) cores.push_back(c.id);
                if (cores.size() > 1) cores.erase(cores.begin() + r.in(0, static_cast<std::int64_t>(cores.size()) - 1));
                t.allowed_cores = cores;
                break;
            }
            case 2: {  // start lag
                Cycles v = r.in(0, 10) * unit;
                g.max_start_lag = g.max_start_lag ? std::min(*g.max_start_lag, v) : v;
                for (auto& t : g.tasks)
                    if (t.max_start_lag) t.max_start_lag = std::min(*t.max_start_lag, v);
                break;
            }
            case 3: {  // deadline
                Cycles v = r.in(8, 20) * unit;
                g.deadline = g.deadline > 0 ? std::min(g.deadline, v) : v;
                break;
            }
            case 4: {  // buffer deadline
                std::vector<elab::Buffer*> cand;
                for (auto& b : g.buffers)
                    if (!b.external) cand.push_back(&b);
                if (cand.empty()) break;
                auto* b = cand[static_cast<std::size_t>(r.in(0, static_cast<std::int64_t>(cand.size()) - 1))];
                Cycles v = r.in(3, 15) * unit;
                b->deadline = b->deadline ? std::min(*b->deadline, v) : v;
                break;
            }
            default: {  // bound on the makespan
                manifest::TimingEquationDoc d;
                d.name = "Cap" + std::to_string(s);
                d.equation_text = "M <= " + std::to_string(r.in(8, 20) * unit);
                d.equation = manifest::parse_equation(d.equation_text);
                d.bindings = {{"M", "makespan"}};
                g.bound_constraints.push_back(std::move(d));
                break;
            }
        }
    }
    return g;
}

std::string describe(const Instance& in) {
    std::ostringstream os;
    const auto& g = in.graph;
    os << "deadline " << g.deadline << " lag " << (g.max_start_lag ? std::to_string(*g.max_start_lag) : "-") << "\n";
    for (const auto& t : g.tasks) {
        os << t.id << " rt=" << t.runtime << " int=" << t.internalsize << " in=[";
        for (auto b : t.inputs) os << g.buffers[b].id << " ";
        os << "] out=[";
        for (auto b : t.outputs) os << g.buffers[b].id << " ";
        os << "] cores=[";
        for (const auto& c : t.allowed_cores) os << c << " ";
        os << "]\n";
    }
    for (const auto& b : g.buffers) {
        os << b.id << " size=" << b.size << (b.external ? " ext" : "") << " pats=[";
        for (const auto& p : b.allowed_patterns) os << p << " ";
        os << "]";
        if (b.deadline) os << " dl=" << *b.deadline;
        os << "\n";
    }
    for (const auto& m : in.topo.memories) os << m.id << " cap=" << m.capacity << "\n";
    for (const auto& c : g.bound_constraints) os << c.name << ": " << c.equation_text << "\n";
    return os.str();
}

}  // namespace ddtwin::testkit
