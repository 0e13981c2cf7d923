#include <yaml-cpp/yaml.h>

#include "ddtwin/manifest.hpp"

namespace ddtwin::manifest {

namespace {

[[noreturn]] void fail(std::string_view file, const YAML::Node& at, const std::string& msg) {
    SourceLoc loc;
    if (at.IsDefined() && at.Mark().line >= 0) loc = {at.Mark().line + 1, at.Mark().column + 1};
    throw DiagnosticError(std::string(file), loc, "deployment: " + msg);
}

std::int64_t integer(std::string_view file, const YAML::Node& n, const std::string& what) {
    try {
        return n.as<std::int64_t>();
    } catch (const YAML::Exception&) {
        fail(file, n, "'" + what + "' must be an integer");
    }
}

std::map<std::string, std::int64_t> int_map(std::string_view file, const YAML::Node& n, const std::string& what) {
    std::map<std::string, std::int64_t> out;
    if (!n.IsDefined() || n.IsNull()) return out;
    if (!n.IsMap()) fail(file, n, "'" + what + "' must be a mapping");
    for (const auto& kv : n) out[kv.first.Scalar()] = integer(file, kv.second, what + "." + kv.first.Scalar());
    return out;
}

}  // namespace

DeploymentConfig parse_deployment(std::string_view yaml_text, std::string_view file) {
    YAML::Node doc;
    try {
        doc = YAML::Load(std::string(yaml_text));
    } catch (const YAML::ParserException& e) {
        throw DiagnosticError(std::string(file), SourceLoc{e.mark.line + 1, e.mark.column + 1}, e.msg);
    }
    if (!doc.IsMap()) fail(file, doc, "expected a mapping document");
    DeploymentConfig cfg;
    if (!doc["entry_flow"].IsScalar()) fail(file, doc, "missing required field 'entry_flow'");
    cfg.entry_flow = doc["entry_flow"].Scalar();
    if (!doc["slot_budget"].IsDefined()) fail(file, doc, "missing required field 'slot_budget'");
    cfg.slot_budget = integer(file, doc["slot_budget"], "slot_budget");
    if (cfg.slot_budget <= 0) fail(file, doc["slot_budget"], "slot_budget must be > 0");
    if (doc["slot_symbol"].IsScalar()) cfg.slot_symbol = doc["slot_symbol"].Scalar();

    if (YAML::Node lag = doc["max_start_lag"]; lag.IsDefined() && !lag.IsNull()) {
        if (lag.IsScalar() && lag.Scalar() == "disabled") {
            cfg.max_start_lag.reset();
        } else {
            cfg.max_start_lag = integer(file, lag, "max_start_lag");
            if (*cfg.max_start_lag < 0) fail(file, lag, "max_start_lag must be >= 0");
        }
    }

    cfg.symbols = int_map(file, doc["symbols"], "symbols");
    for (const auto& [k, v] : cfg.symbols)
        if (v <= 0) fail(file, doc["symbols"], "symbol '" + k + "' must be strictly positive");
    cfg.assignments = int_map(file, doc["assignments"], "assignments");

    if (YAML::Node md = doc["metadata"]; md.IsDefined() && !md.IsNull()) {
        if (!md.IsSequence()) fail(file, md, "'metadata' must be a list of file paths");
        for (const auto& m : md) cfg.metadata_files.push_back(m.Scalar());
    }

    if (YAML::Node sc = doc["scenarios"]; sc.IsDefined() && !sc.IsNull()) {
        if (!sc.IsMap()) fail(file, sc, "'scenarios' must be a mapping");
        if (sc["size_threshold"].IsDefined())
            cfg.strategy.size_threshold = integer(file, sc["size_threshold"], "scenarios.size_threshold");
        if (YAML::Node sweep = sc["start_lag_sweep"]; sweep.IsDefined()) {
            if (!sweep.IsSequence()) fail(file, sweep, "'start_lag_sweep' must be a list");
            for (const auto& v : sweep) cfg.strategy.start_lag_sweep.push_back(integer(file, v, "start_lag_sweep"));
        }
        if (sc["add_flow_target"].IsScalar()) cfg.strategy.add_flow_target = sc["add_flow_target"].Scalar();
        if (sc["add_flow_copies"].IsDefined())
            cfg.strategy.add_flow_copies = static_cast<int>(integer(file, sc["add_flow_copies"], "add_flow_copies"));
        if (cfg.strategy.add_flow_copies < 1) fail(file, sc, "'add_flow_copies' must be >= 1");
    }

    if (YAML::Node r = doc["risk"]; r.IsDefined() && !r.IsNull()) {
        if (!r.IsMap()) fail(file, r, "'risk' must be a mapping");
        if (r["high"].IsDefined()) cfg.risk.high_pct = static_cast<int>(integer(file, r["high"], "risk.high"));
        if (r["moderate"].IsDefined())
            cfg.risk.moderate_pct = static_cast<int>(integer(file, r["moderate"], "risk.moderate"));
        if (r["floor"].IsDefined())
            cfg.risk.recommend_floor_pct = static_cast<int>(integer(file, r["floor"], "risk.floor"));
        if (cfg.risk.moderate_pct > cfg.risk.high_pct) fail(file, r, "risk.moderate must not exceed risk.high");
    }
    return cfg;
}

}  // namespace ddtwin::manifest
