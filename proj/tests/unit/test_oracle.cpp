#include "doctest.h"
#include "instances.hpp"

using namespace ddtwin;

TEST_CASE("solver matches the oracle on random small instances") {
    int infeasible = 0;
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        auto in = testkit::random_instance(seed);
        auto oracle = sched::brute_force_oracle(in.graph, in.topo, in.catalog);
        sched::SolveOptions o;
        o.explain = false;
        auto got = sched::solve_best_case(in.graph, in.topo, in.catalog, o);
        CAPTURE(seed);
        CAPTURE(testkit::describe(in));
        REQUIRE(got.status != sched::SolveStatus::Unknown);
        if (!oracle) {
            ++infeasible;
            CHECK(got.status == sched::SolveStatus::Infeasible);
            continue;
        }
        REQUIRE(got.status == sched::SolveStatus::Optimal);
        CHECK(got.schedule->makespan == *oracle);
        CHECK(sched::check_schedule(*got.schedule, in.graph, in.topo, in.catalog).empty());
    }
    MESSAGE("infeasible instances: " << infeasible);
}
