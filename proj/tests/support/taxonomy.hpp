#pragma once

// Hand-built schedules, each breaking one rule of the checker.

#include <string>
#include <vector>

#include "instances.hpp"

namespace ddtwin::testkit {

struct TaxonomyCase {
    std::string name;
    sched::ViolationKind expect;
    Instance instance;
    sched::Schedule schedule;
};

// A -> x -> B plus an unrelated C, two cores. The valid schedule runs A and B
// on c_0 through a pipeline and C on c_1.
Instance taxonomy_base(Bytes l3_capacity = 1 << 24);
sched::Schedule taxonomy_valid(const Instance& in);

std::vector<TaxonomyCase> taxonomy_cases();

}  // namespace ddtwin::testkit
