#include "taxonomy.hpp"

namespace ddtwin::testkit {

namespace {

sched::Transfer xfer(const Instance& in, const std::string& pattern, Cycles start, Bytes size) {
    auto cls = manifest::classify_pattern(pattern)->cls;
    return {pattern, start, manifest::transfer_cost(cls, size, in.topo)};
}

}  // namespace

Instance taxonomy_base(Bytes l3_capacity) {
    Instance in;
    in.topo = small_topology(2, l3_capacity);
    in.catalog = manifest::generate_patterns_from_topology(in.topo);
    std::vector<std::string> all;
    for (const auto& p : in.catalog.patterns()) all.push_back(p.name);

    auto& g = in.graph;
    elab::Buffer ext;
    ext.id = "in";
    ext.size = 64;
    ext.external = true;
    elab::Buffer x;
    x.id = "x";
    x.size = 640;
    x.definer = 0;
    x.allowed_patterns = all;
    elab::Buffer y = x;
    y.id = "y";
    y.definer = 1;
    elab::Buffer z = x;
    z.id = "z";
    z.definer = 2;
    g.buffers = {ext, x, y, z};
    g.tasks = {
        {"A", "f", 100, 0, {0}, {1}, {}, std::nullopt, "g"},
        {"B", "f", 100, 0, {1}, {2}, {}, std::nullopt, "g"},
        {"C", "f", 100, 0, {0}, {3}, {}, std::nullopt, "g"},
    };
    g.deadline = 1'000'000;
    g.rebuild_observers();
    return in;
}

sched::Schedule taxonomy_valid(const Instance& in) {
    sched::Schedule s;
    s.tasks = {{"c_0", 0}, {"c_0", 100}, {"c_1", 0}};
    s.transfers = {std::nullopt, xfer(in, "pipeline.c_0.L3_0", 100, 640), xfer(in, "pipeline.c_0.L3_0", 200, 640),
                   xfer(in, "pipeline.c_1.L3_0", 100, 640)};
    s.makespan = 200;
    return s;
}

std::vector<TaxonomyCase> taxonomy_cases() {
    using K = sched::ViolationKind;
    std::vector<TaxonomyCase> out;

    {  // B reads x over L2 before the copy lands
        auto in = taxonomy_base();
        auto s = taxonomy_valid(in);
        s.transfers[1] = xfer(in, "L2toL2.c_0.L3_0.accL3_0", 100, 640);
        s.tasks[1] = {"c_1", 110};
        s.transfers[2] = xfer(in, "pipeline.c_1.L3_0", 210, 640);
        out.push_back({"read before write", K::ReadBeforeWrite, in, s});
    }
    {  // L3 smaller than x
        auto in = taxonomy_base(100);
        auto s = taxonomy_valid(in);
        out.push_back({"buffer overflow", K::BufferOverflow, in, s});
    }
    {
        auto in = taxonomy_base();
        in.graph.deadline = 150;
        out.push_back({"deadline miss", K::DeadlineMiss, in, taxonomy_valid(in)});
    }
    {  // C moved onto c_0 while A runs
        auto in = taxonomy_base();
        auto s = taxonomy_valid(in);
        s.tasks[2] = {"c_0", 50};
        s.transfers[3] = xfer(in, "pipeline.c_0.L3_0", 150, 640);
        out.push_back({"core overlap", K::CoreOverlap, in, s});
    }
    {  // pipeline from c_0, observed from c_1
        auto in = taxonomy_base();
        auto s = taxonomy_valid(in);
        s.tasks[1] = {"c_1", 100};
        s.transfers[2] = xfer(in, "pipeline.c_1.L3_0", 200, 640);
        out.push_back({"pattern violation", K::PatternViolation, in, s});
    }
    {  // B waits 50 cycles with a lag of 10
        auto in = taxonomy_base();
        in.graph.tasks[1].max_start_lag = 10;
        auto s = taxonomy_valid(in);
        s.tasks[1] = {"c_0", 150};
        s.transfers[2] = xfer(in, "pipeline.c_0.L3_0", 250, 640);
        s.makespan = 250;
        out.push_back({"lag violation", K::LagViolation, in, s});
    }
    return out;
}

}  // namespace ddtwin::testkit
