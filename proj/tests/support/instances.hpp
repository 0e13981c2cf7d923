#pragma once

// Seeded random scheduling instances for the oracle and monotonicity suites.

#include <cstdint>
#include <random>
#include <string>

#include "ddtwin/graph.hpp"
#include "ddtwin/manifest.hpp"
#include "ddtwin/scheduler.hpp"

namespace ddtwin::testkit {

struct Instance {
    elab::TaskGraph graph;
    manifest::HardwareTopology topo;
    manifest::PatternCatalog catalog;
};

struct GenParams {
    int min_tasks = 2;
    int max_tasks = 8;
    int cores = 2;
    int max_patterns = 3;      // per buffer
    bool residency = true;     // sometimes shrink memories so capacity binds
    bool constraints = true;   // deadlines, lags, pins, bound equations
};

// L2 per core, one shared L3, one DDR; catalog generated from it.
manifest::HardwareTopology small_topology(int cores, Bytes l3_capacity = 1 << 24);

Instance random_instance(std::uint64_t seed, const GenParams& p = {});

// C' with C ⊆ C': narrower patterns/cores, lags, deadlines. Returns the graph
// only; topology and catalog stay shared. `reference`, when known, is C's
// makespan and sets the scale of the new bounds.
elab::TaskGraph tighten(const Instance& in, std::uint64_t seed, Cycles reference = 0);

// One line per task and buffer, for failure messages.
std::string describe(const Instance& in);

}  // namespace ddtwin::testkit
