#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
};

std::string read(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("ddtwin_cli_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

Run cli(const std::string& args) {
    auto dir = scratch("io");
    auto o = dir / "out.txt", e = dir / "err.txt";
    std::string cmd = std::string("\"") + DDTWIN_CLI + "\" " + args + " >\"" + o.string() + "\" 2>\"" + e.string() + "\"";
    int rc = std::system(cmd.c_str());
    return {WEXITSTATUS(rc), read(o), read(e)};
}

std::string data(const std::string& rel) { return std::string("\"") + DDTWIN_DATA + "/" + rel + "\""; }

}  // namespace

TEST_CASE("validate accepts the srs fixtures") {
    auto r = cli("validate --manifest " + data("srs/run.yaml"));
    CHECK(r.code == 0);
    CHECK(r.out.find("10 tasks") != std::string::npos);
}

TEST_CASE("dangling member is named") {
    auto r = cli("validate --manifest " + data("srs/ghost/run.yaml"));
    CHECK(r.code == 1);
    CHECK(r.err.find("ghost") != std::string::npos);
}

TEST_CASE("missing manifest names its path") {
    auto r = cli("validate --manifest /nonexistent/run.yaml");
    CHECK(r.code != 0);
    CHECK(r.err.find("/nonexistent/run.yaml") != std::string::npos);
}

TEST_CASE("bad mode is a usage error") {
    auto r = cli("solve --manifest " + data("trivial/run.yaml") + " --mode fastest");
    CHECK(r.code == 1);
}

TEST_CASE("single task solves to its runtime") {
    auto out = scratch("trivial");
    auto r = cli("solve --manifest " + data("trivial/run.yaml") + " --out \"" + out.string() + "\"");
    CHECK(r.code == 0);
    CHECK(r.out.find("makespan: 7,200 cycles") != std::string::npos);
    CHECK(fs::exists(out / "schedule.json"));
    CHECK(read(out / "summary.txt").find("7,200") != std::string::npos);
}

TEST_CASE("slot below the runtime is infeasible with a deadline witness") {
    auto out = scratch("tight");
    auto r = cli("solve --manifest " + data("trivial/tight/run.yaml") + " --out \"" + out.string() + "\"");
    CHECK(r.code == 2);
    CHECK(r.out.find("infeasible") != std::string::npos);
    CHECK(r.out.find("witness: DEADLINE") != std::string::npos);
}

TEST_CASE("scenarios list failures first and report merges") {
    auto a = scratch("scen_a");
    auto r = cli("scenarios --manifest " + data("trivial/run.yaml") + " --out \"" + a.string() + "\"");
    REQUIRE(r.code == 0);
    auto csv = read(a / "scenarios.csv");
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);  // baseline comment
    std::getline(lines, line);  // header
    std::getline(lines, line);
    CHECK(line.rfind("slot-100,INFEASIBLE,", 0) == 0);
    CHECK(line.find("CERTAIN_FAILURE") != std::string::npos);

    auto again = scratch("scen_b");
    cli("scenarios --manifest " + data("trivial/run.yaml") + " --out \"" + again.string() + "\"");
    CHECK(read(again / "scenarios.csv") == csv);

    auto rep = cli("report \"" + a.string() + "\"");
    CHECK(rep.code == 0);
    auto first = read(a / "report.csv");
    cli("report \"" + a.string() + "\"");
    CHECK(read(a / "report.csv") == first);

    // a second run with one row changed
    fs::create_directories(a / "other");
    std::string bad = csv;
    auto pos = bad.find("no-constraints,7200");
    REQUIRE(pos != std::string::npos);
    bad.replace(pos, 19, "no-constraints,7300");
    std::ofstream(a / "other" / "scenarios.csv") << bad;
    auto clash = cli("report \"" + a.string() + "\"");
    CHECK(clash.code == 1);
    CHECK(clash.err.find("no-constraints") != std::string::npos);
}

TEST_CASE("report over an empty directory is header only") {
    auto d = scratch("empty");
    auto r = cli("report \"" + d.string() + "\"");
    CHECK(r.code == 0);
    CHECK(read(d / "report.csv") == "strategy,latency_cycles,delta_pct,risk\n");
}
