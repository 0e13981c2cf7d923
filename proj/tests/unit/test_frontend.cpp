#include <variant>

#include "doctest.h"
#include "ddtwin/dsl.hpp"
#include "ddtwin/manifest.hpp"
#include "util.hpp"

using namespace ddtwin;

TEST_CASE("srs flow parses verbatim") {
    auto defs = dsl::parse_flow_source(slurp("srs/srs_flow.rdsl"), "srs_flow.rdsl");
    REQUIRE(defs.size() == 1);
    const auto& f = defs[0];
    CHECK(f.name == "srsChest_ueSpecific");
    CHECK(f.params.size() == 4);
    REQUIRE(f.internals.size() == 1);
    CHECK(f.internals[0].name == "perUE_srsChestEst");
    CHECK(f.internals[0].shape.size() == 2);
    REQUIRE(f.instantiations.size() == 2);
    CHECK(f.instantiations[0].callee == "srsChestProc_perUE_perRxAnt_flow");
    CHECK(f.instantiations[0].iterators.size() == 2);
    CHECK(f.instantiations[1].iterators.size() == 1);
    CHECK(f.params[0].direction == dsl::Direction::In);
}

TEST_CASE("verbatim flow references an undeclared stream") {
    auto defs = dsl::parse_flow_source(slurp("srs/srs_flow.rdsl"), "srs_flow.rdsl");
    dsl::SymbolTable sym({{"AVG_NUM_SRS_UE", 2}, {"MAX_NUM_RX_ANT", 4}});
    try {
        dsl::validate_flows(defs, sym, "srs_flow.rdsl");
        FAIL("expected a diagnostic");
    } catch (const DiagnosticError& e) {
        CHECK(std::string(e.what()).find("perUE_srsChest") != std::string::npos);
    }
    auto fixed = dsl::parse_flow_source(slurp("srs/srs_flow_fixed.rdsl"));
    CHECK_NOTHROW(dsl::validate_flows(fixed, sym));
}

TEST_CASE("print then parse is the identity") {
    for (const char* f : {"srs/srs_flow.rdsl", "srs/srs_flow_fixed.rdsl", "du_downlink/du_downlink.rdsl"}) {
        CAPTURE(f);
        auto a = dsl::parse_flow_source(slurp(f));
        auto b = dsl::parse_flow_source(dsl::print_flows(a));
        CHECK(dsl::print_flows(a) == dsl::print_flows(b));
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].name == b[i].name);
            CHECK(a[i].params.size() == b[i].params.size());
            CHECK(a[i].instantiations.size() == b[i].instantiations.size());
        }
    }
}

TEST_CASE("syntax errors carry a location") {
    try {
        dsl::parse_flow_source("Flow f\n  a : strem[2]\n", "bad.rdsl");
        FAIL("expected a diagnostic");
    } catch (const DiagnosticError& e) {
        std::string text = e.what();
        CHECK(text.find("bad.rdsl:2:") != std::string::npos);
        CHECK(text.find("strem") != std::string::npos);
    }
}

TEST_CASE("timing documents") {
    auto docs = manifest::parse_constraint_stream(slurp("srs/timing.yaml"));
    REQUIRE(docs.size() == 2);
    const auto& eq = std::get<manifest::TimingEqualityDoc>(docs[0]);
    CHECK(eq.name == "Modem_Period");
    CHECK(eq.variable_name == "modem_period");
    CHECK(eq.value == 1'000'000);
    const auto& rel = std::get<manifest::TimingEquationDoc>(docs[1]);
    CHECK(rel.name == "Modem_Period2");
    CHECK(rel.equation.terms.size() == 3);
    CHECK(rel.bindings.at("A") == "num_ue1");
    // 400 <= 1*370 + 100 < 500
    CHECK(manifest::evaluate_timing_equation(rel, {{"grid_period", 400}, {"num_ue1", 1}, {"gp_base", 100}}));
    CHECK_FALSE(manifest::evaluate_timing_equation(rel, {{"grid_period", 480}, {"num_ue1", 1}, {"gp_base", 100}}));
    CHECK_THROWS_AS(manifest::evaluate_timing_equation(rel, {{"grid_period", 400}}), DiagnosticError);
}

TEST_CASE("function metadata") {
    auto docs = manifest::parse_constraint_stream(slurp("srs/pdsch_sym.yaml"));
    REQUIRE(docs.size() == 1);
    const auto& md = std::get<manifest::FunctionMetadata>(docs[0]);
    CHECK(md.name == "NR5G1_DL_PDSCH_SYM");
    CHECK(md.available_patterns.size() == 16);
    CHECK(md.elementsize == 2'800'000);
    CHECK(md.internalsize == 8'000'000);
    CHECK(md.runtime == 7200);
}

TEST_CASE("pattern fragment parses with elided sets") {
    auto cat = manifest::parse_pattern_catalog(slurp("srs/pattern_fragment.xml"), "pattern_fragment.xml",
                                               manifest::ReferenceCheck::Structural);
    REQUIRE(cat.size() == 1);
    const auto& p = cat.patterns()[0];
    CHECK(p.defining_memory == "L3_0");
    CHECK(p.exclusive_define_with.size() == 4);
    CHECK(p.shares_with(manifest::SharedLevel::L2, manifest::SidePair::OO).size() == 12);
    CHECK(p.shares_with(manifest::SharedLevel::L2, manifest::SidePair::II).empty());
    for (auto s : {manifest::SidePair::II, manifest::SidePair::IO, manifest::SidePair::OI, manifest::SidePair::OO})
        CHECK(p.shares_with(manifest::SharedLevel::L3, s).empty());
    // the members name patterns outside the fragment
    CHECK_THROWS_AS(manifest::parse_pattern_catalog(slurp("srs/pattern_fragment.xml")), DiagnosticError);
}

TEST_CASE("generated catalog covers the four-core example") {
    auto topo = manifest::parse_topology(slurp("srs/topology.yaml"));
    auto cat = manifest::generate_patterns_from_topology(topo);
    CHECK(cat.size() == 16);
    auto docs = manifest::parse_constraint_stream(slurp("srs/pdsch_sym.yaml"));
    for (const auto& name : std::get<manifest::FunctionMetadata>(docs[0]).available_patterns)
        CHECK_MESSAGE(cat.find(name) != nullptr, name);
    CHECK(cat.find("big_delay.c.0.L3.0.DDR.0.accl3_0") != nullptr);
    auto round = manifest::parse_pattern_catalog(manifest::write_pattern_catalog(cat));
    CHECK(round.size() == cat.size());
    const auto* p = cat.find("big_delay.c_0.L3_0.DDR_0.L3_0");
    REQUIRE(p);
    CHECK(manifest::transfer_cost(*p, 2'800'000, topo) == 176'000);
    CHECK(manifest::transfer_cost(manifest::PatternClass::Pipeline, 2'800'000, topo) == 0);
}

TEST_CASE("transfer cost is monotone in size") {
    auto topo = manifest::parse_topology(slurp("srs/topology.yaml"));
    for (auto cls : {manifest::PatternClass::Pipeline, manifest::PatternClass::L2toL2, manifest::PatternClass::BigDelay}) {
        Cycles prev = 0;
        for (Bytes s = 0; s < 100'000; s += 777) {
            auto c = manifest::transfer_cost(cls, s, topo);
            CHECK(c >= prev);
            prev = c;
        }
    }
}

TEST_CASE("equations") {
    auto e = manifest::parse_equation("C <= A*370 + B < 500");
    CHECK(e.ops.size() == 2);
    CHECK(manifest::to_string(e) == manifest::to_string(manifest::parse_equation(manifest::to_string(e))));
    CHECK_THROWS_AS(manifest::parse_equation("C <= "), DiagnosticError);
}
