#include <array>
#include <algorithm>
#include <map>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "ddtwin/scenario.hpp"

namespace ddtwin::scenario {

namespace {

constexpr std::string_view kHeader = "strategy,latency_cycles,delta_pct,risk";

[[noreturn]] void fail_at(std::string_view file, const YAML::Node& n, const std::string& msg) {
    SourceLoc loc;
    if (n.IsDefined() && n.Mark().line >= 0) loc = {n.Mark().line + 1, n.Mark().column + 1};
    throw DiagnosticError(std::string(file), loc, msg);
}

std::int64_t as_int(std::string_view file, const YAML::Node& n, const std::string& what) {
    try {
        return n.as<std::int64_t>();
    } catch (const YAML::Exception&) {
        fail_at(file, n, "'" + what + "' must be an integer");
    }
}

bool plain_name(const std::string& s) {
    return !s.empty() && s.find_first_of(",\"\n\r") == std::string::npos && s[0] != '#';
}

}  // namespace

std::vector<ScenarioSpec> parse_scenario_specs(std::string_view yaml_text, std::string_view file) {
    std::vector<YAML::Node> docs;
    try {
        docs = YAML::LoadAll(std::string(yaml_text));
    } catch (const YAML::ParserException& e) {
        throw DiagnosticError(std::string(file), SourceLoc{e.mark.line + 1, e.mark.column + 1}, e.msg);
    }
    std::vector<ScenarioSpec> out;
    for (YAML::Node d : docs) {
        if (d.IsNull()) continue;
        if (!d.IsMap()) fail_at(file, d, "scenario document must be a mapping");
        if (!d["kind"].IsScalar() || d["kind"].Scalar() != "scenario")
            fail_at(file, d, "expected 'kind: scenario'");
        ScenarioSpec s;
        if (!d["name"].IsScalar()) fail_at(file, d, "scenario without a 'name'");
        s.name = d["name"].Scalar();
        if (!plain_name(s.name)) fail_at(file, d["name"], "scenario name '" + s.name + "' may not contain commas or quotes");
        YAML::Node spec = d["spec"];
        if (!spec.IsMap()) fail_at(file, d, "scenario '" + s.name + "' needs a 'spec' mapping");
        if (spec["baseline"].IsScalar()) s.baseline_ref = spec["baseline"].Scalar();
        YAML::Node inj = spec["injections"];
        if (inj.IsDefined() && !inj.IsNull()) {
            if (!inj.IsSequence()) fail_at(file, inj, "'injections' must be a list");
            for (YAML::Node n : inj) {
                if (!n.IsMap() || !n["kind"].IsScalar()) fail_at(file, n, "injection needs a 'kind'");
                Injection i;
                try {
                    i.kind = injection_kind_from(n["kind"].Scalar());
                    i.target = Selector::parse(n["target"].IsScalar() ? n["target"].Scalar() : "all");
                } catch (const DiagnosticError& e) {
                    fail_at(file, n, e.what());
                }
                if (n["cores"].IsDefined()) {
                    if (!n["cores"].IsSequence()) fail_at(file, n["cores"], "'cores' must be a list");
                    for (const auto& c : n["cores"]) i.cores.push_back(c.Scalar());
                }
                if (n["value"].IsDefined()) i.value = as_int(file, n["value"], "value");
                if (n["copies"].IsDefined()) i.copies = static_cast<int>(as_int(file, n["copies"], "copies"));
                bool needs_value = i.kind == InjectionKind::StartLag || i.kind == InjectionKind::TightenDeadline;
                if (needs_value && !n["value"].IsDefined())
                    fail_at(file, n, std::string(to_string(i.kind)) + " needs a 'value'");
                if (i.kind == InjectionKind::PinTasks && i.cores.empty())
                    fail_at(file, n, "PIN_TASKS needs a non-empty 'cores' list");
                s.injections.push_back(std::move(i));
            }
        }
        for (const auto& prev : out)
            if (prev.name == s.name) fail_at(file, d, "duplicate scenario name '" + s.name + "'");
        out.push_back(std::move(s));
    }
    return out;
}

std::string group_digits(std::int64_t v) {
    std::string s = std::to_string(v < 0 ? -v : v);
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i && (s.size() - i) % 3 == 0) out += ',';
        out += s[i];
    }
    return v < 0 ? "-" + out : out;
}

std::string results_to_csv(const std::vector<ScenarioResult>& results) {
    std::string out;
    if (!results.empty()) out += "# baseline_latency_cycles=" + std::to_string(results.front().baseline) + "\n";
    out += std::string(kHeader) + "\n";
    for (const auto& r : results) {
        out += r.name + ",";
        switch (r.outcome) {
            case Outcome::Feasible:
                out += std::to_string(r.latency) + "," + std::to_string(r.delta_pct.value_or(0));
                break;
            case Outcome::Infeasible: out += "INFEASIBLE,"; break;
            case Outcome::Unknown: out += "UNKNOWN,"; break;
        }
        out += std::string(",") + to_string(r.risk) + "\n";
    }
    return out;
}

std::vector<ScenarioResult> results_from_csv(std::string_view text, std::string_view file,
                                             const manifest::RiskThresholds& risk) {
    std::vector<ScenarioResult> out;
    std::optional<Cycles> baseline;
    bool header = false;
    std::istringstream in{std::string(text)};
    int lineno = 0;
    auto fail = [&](const std::string& msg) -> void {
        throw DiagnosticError(std::string(file), SourceLoc{lineno, 1}, msg);
    };
    auto number = [&](const std::string& s, const std::string& what) -> std::int64_t {
        try {
            std::size_t used = 0;
            auto v = std::stoll(s, &used);
            if (used == s.size()) return v;
        } catch (const std::exception&) {
        }
        fail("malformed " + what + " '" + s + "'");
        return 0;
    };
    for (std::string line; std::getline(in, line);) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::string key = "# baseline_latency_cycles=";
            if (line.rfind(key, 0) == 0) baseline = number(line.substr(key.size()), "baseline");
            continue;
        }
        if (!header) {
            if (line != kHeader) fail("schema mismatch: expected header '" + std::string(kHeader) + "', got '" + line + "'");
            header = true;
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ss(line);
        for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
        if (line.back() == ',') f.emplace_back();
        if (f.size() != 4) fail("schema mismatch: expected 4 fields, got " + std::to_string(f.size()));
        ScenarioResult r;
        r.name = f[0];
        r.baseline = baseline.value_or(0);
        if (f[1] == "INFEASIBLE") {
            r.outcome = Outcome::Infeasible;
        } else if (f[1] == "UNKNOWN") {
            r.outcome = Outcome::Unknown;
        } else {
            r.outcome = Outcome::Feasible;
            r.latency = number(f[1], "latency");
            r.delta_pct = static_cast<int>(number(f[2], "delta_pct"));
        }
        if (r.outcome != Outcome::Feasible && !f[2].empty()) fail("delta_pct given for a non-feasible row");
        r.risk = Risk::Unknown;
        bool known = false;
        for (auto k : {Risk::CertainFailure, Risk::High, Risk::Moderate, Risk::Low, Risk::Unknown})
            if (f[3] == to_string(k)) r.risk = k, known = true;
        if (!known) fail("unknown risk class '" + f[3] + "'");
        r.recommended = !(r.risk == Risk::Low && r.delta_pct && *r.delta_pct < risk.recommend_floor_pct);
        out.push_back(std::move(r));
    }
    if (!header) throw DiagnosticError(std::string(file), SourceLoc{}, "schema mismatch: missing CSV header");
    return out;
}

std::string results_to_table(const std::vector<ScenarioResult>& results) {
    std::vector<std::array<std::string, 4>> rows;
    rows.push_back({"Strategy", "Latency (clock cycles)", "delta", "risk"});
    for (const auto& r : results) {
        std::array<std::string, 4> row;
        row[0] = r.name;
        switch (r.outcome) {
            case Outcome::Feasible:
                row[1] = group_digits(r.latency);
                row[2] = (*r.delta_pct >= 0 ? "+" : "") + std::to_string(*r.delta_pct) + "%";
                break;
            case Outcome::Infeasible: row[1] = "INFEASIBLE"; row[2] = "-"; break;
            case Outcome::Unknown: row[1] = "UNKNOWN"; row[2] = "-"; break;
        }
        row[3] = to_string(r.risk);
        if (!r.witness.empty()) row[3] += " (" + r.witness + ")";
        if (!r.recommended) row[3] += " not recommended";
        rows.push_back(std::move(row));
    }
    std::array<std::size_t, 4> w{};
    for (const auto& row : rows)
        for (std::size_t i = 0; i < 4; ++i) w[i] = std::max(w[i], row[i].size());
    std::string out;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        std::string line;
        for (std::size_t i = 0; i < 4; ++i) {
            std::string cell = rows[r][i];
            if (i < 3) cell.resize(w[i], ' ');
            line += (i ? " | " : "") + cell;
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out += line + "\n";
        if (r == 0) {
            std::string rule;
            for (std::size_t i = 0; i < 4; ++i) rule += (i ? "-+-" : "") + std::string(w[i], '-');
            out += rule + "\n";
        }
    }
    return out;
}

std::vector<ScenarioResult> merge_results(const std::vector<std::vector<ScenarioResult>>& sets,
                                          const std::vector<std::string>& origins) {
    std::map<std::string, std::pair<ScenarioResult, std::string>> by_name;
    std::optional<std::pair<Cycles, std::string>> baseline;
    for (std::size_t i = 0; i < sets.size(); ++i) {
        std::string origin = i < origins.size() ? origins[i] : "set " + std::to_string(i + 1);
        for (const auto& r : sets[i]) {
            if (!baseline) baseline = {r.baseline, origin};
            if (r.baseline != baseline->first)
                throw DiagnosticError("mixed baselines: " + baseline->second + " uses " + std::to_string(baseline->first) +
                                      ", " + origin + " uses " + std::to_string(r.baseline));
            auto [it, fresh] = by_name.emplace(r.name, std::pair{r, origin});
            if (!fresh && !(it->second.first == r))
                throw DiagnosticError("conflicting results for scenario '" + r.name + "' (" + it->second.second +
                                      " vs " + origin + ")");
        }
    }
    std::vector<ScenarioResult> out;
    for (auto& [_, v] : by_name) out.push_back(v.first);
    return rank_scenarios(std::move(out));
}

}  // namespace ddtwin::scenario
