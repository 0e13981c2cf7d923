#include <set>

#include "doctest.h"
#include "ddtwin/pipeline.hpp"
#include "util.hpp"

using namespace ddtwin;

namespace {

pipeline::Workspace srs() {
    return pipeline::load_workspace(pipeline::load_run_manifest(std::string(DDTWIN_DATA) + "/srs/run.yaml"));
}

}  // namespace

TEST_CASE("srs flow elaborates to ten tasks") {
    auto ws = srs();
    auto g = pipeline::build_graph(ws);
    CHECK(g.tasks.size() == 10);
    CHECK(g.buffers.size() == 42);
    CHECK(g.deadline == 1'000'000);
    auto t = g.find_task("srsChest_ueSpecific/srsChestProc_perUE_perRxAnt_flow[i=2,j=4]");
    REQUIRE(t);
    CHECK(g.tasks[*t].runtime == 7200);
    CHECK(g.tasks[*t].group == "srsChest_ueSpecific/srsChestProc_perUE_perRxAnt_flow[i=2,j=4]");
    // every internal buffer has one definer
    for (const auto& b : g.buffers) CHECK((b.external || b.definer.has_value()));
    auto order = g.topological_order();
    REQUIRE(order);
    CHECK(order->size() == 10);
}

TEST_CASE("bound equations survive binding") {
    auto g = pipeline::build_graph(srs());
    REQUIRE(g.bound_constraints.size() == 1);
    CHECK(g.bound_constraints[0].name == "Modem_Period2");
    CHECK(g.assignments.at("grid_period") == 400);
}

TEST_CASE("graph json round trip") {
    auto g = pipeline::build_graph(srs());
    auto text = elab::graph_to_json(g);
    auto back = elab::graph_from_json(text);
    CHECK(elab::graph_to_json(back) == text);
    CHECK(back.tasks.size() == g.tasks.size());
    CHECK(back.deadline == g.deadline);
}

TEST_CASE("missing leaf metadata names the function") {
    auto ws = srs();
    ws.metadata.erase(ws.metadata.begin());
    try {
        pipeline::build_graph(ws);
        FAIL("expected a diagnostic");
    } catch (const DiagnosticError& e) {
        CHECK(std::string(e.what()).find("srsChestProc_perUE_perRxAnt_flow") != std::string::npos);
    }
}

TEST_CASE("static checks are clean on the bundled fixtures") {
    for (const char* run : {"/srs/run.yaml", "/du_downlink/run.yaml"}) {
        CAPTURE(run);
        auto ws = pipeline::load_workspace(pipeline::load_run_manifest(std::string(DDTWIN_DATA) + run));
        auto g = pipeline::build_graph(ws);
        for (const auto& f : elab::check_static(g, ws.topo))
            CHECK_MESSAGE(f.kind == elab::FindingKind::UnreachableTask, f.message);
    }
}

TEST_CASE("du analog shape") {
    auto ws = pipeline::load_workspace(pipeline::load_run_manifest(std::string(DDTWIN_DATA) + "/du_downlink/run.yaml"));
    auto g = pipeline::build_graph(ws);
    std::set<std::string> groups;
    for (const auto& t : g.tasks) groups.insert(t.group);
    CHECK(groups.size() == 2);
    CHECK(ws.topo.cores.size() == 4);
}
