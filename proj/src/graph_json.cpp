#include "json.hpp"

#include "ddtwin/graph.hpp"

namespace ddtwin::elab {

using nlohmann::json;

namespace {

template <typename T>
json opt(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

}  // namespace

std::string graph_to_json(const TaskGraph& g) {
    json j;
    j["deadline"] = g.deadline;
    j["max_start_lag"] = opt(g.max_start_lag);
    j["slot_symbol"] = g.slot_symbol;
    j["assignments"] = g.assignments;
    json tasks = json::array();
    for (const auto& t : g.tasks) {
        json jt;
        jt["id"] = t.id;
        jt["function"] = t.function;
        jt["runtime"] = t.runtime;
        jt["internalsize"] = t.internalsize;
        jt["inputs"] = json::array();
        for (BufferId b : t.inputs) jt["inputs"].push_back(g.buffers[b].id);
        jt["outputs"] = json::array();
        for (BufferId b : t.outputs) jt["outputs"].push_back(g.buffers[b].id);
        jt["allowed_cores"] = t.allowed_cores;
        jt["max_start_lag"] = opt(t.max_start_lag);
        jt["group"] = t.group;
        tasks.push_back(std::move(jt));
    }
    j["tasks"] = std::move(tasks);
    json buffers = json::array();
    json edges = json::array();
    for (const auto& b : g.buffers) {
        json jb;
        jb["id"] = b.id;
        jb["size"] = b.size;
        jb["definer"] = b.definer ? json(g.tasks[*b.definer].id) : json(nullptr);
        jb["observers"] = json::array();
        for (TaskId t : b.observers) {
            jb["observers"].push_back(g.tasks[t].id);
            if (b.definer) edges.push_back({{"from", g.tasks[*b.definer].id}, {"to", g.tasks[t].id}, {"buffer", b.id}});
        }
        jb["allowed_patterns"] = b.allowed_patterns;
        jb["labels"] = b.labels;
        jb["external"] = b.external;
        jb["release"] = b.release;
        jb["deadline"] = opt(b.deadline);
        buffers.push_back(std::move(jb));
    }
    j["buffers"] = std::move(buffers);
    j["edges"] = std::move(edges);
    json bc = json::array();
    for (const auto& c : g.bound_constraints)
        bc.push_back({{"name", c.name}, {"equation", c.equation_text}, {"bindings", c.bindings}});
    j["bound_constraints"] = std::move(bc);
    return j.dump(2) + "\n";
}

TaskGraph graph_from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DiagnosticError(std::string("graph dump: ") + e.what());
    }
    try {
        TaskGraph g;
        g.deadline = j.at("deadline").get<Cycles>();
        if (!j.at("max_start_lag").is_null()) g.max_start_lag = j["max_start_lag"].get<Cycles>();
        g.slot_symbol = j.value("slot_symbol", std::string("modem_period"));
        if (j.contains("assignments")) g.assignments = j["assignments"].get<std::map<std::string, std::int64_t>>();
        std::map<std::string, BufferId> buffer_ids;
        for (const auto& jb : j.at("buffers")) {
            Buffer b;
            b.id = jb.at("id").get<std::string>();
            b.size = jb.at("size").get<Bytes>();
            b.allowed_patterns = jb.at("allowed_patterns").get<std::vector<std::string>>();
            b.labels = jb.value("labels", std::vector<std::string>{});
            b.external = jb.value("external", false);
            b.release = jb.value("release", Cycles{0});
            if (jb.contains("deadline") && !jb["deadline"].is_null()) b.deadline = jb["deadline"].get<Cycles>();
            if (!buffer_ids.emplace(b.id, g.buffers.size()).second)
                throw DiagnosticError("graph dump: duplicate buffer '" + b.id + "'");
            g.buffers.push_back(std::move(b));
        }
        auto buffer = [&](const json& v) {
            auto it = buffer_ids.find(v.get<std::string>());
            if (it == buffer_ids.end()) throw DiagnosticError("graph dump: unknown buffer '" + v.get<std::string>() + "'");
            return it->second;
        };
        for (const auto& jt : j.at("tasks")) {
            TaskInstance t;
            t.id = jt.at("id").get<std::string>();
            t.function = jt.at("function").get<std::string>();
            t.runtime = jt.at("runtime").get<Cycles>();
            t.internalsize = jt.value("internalsize", Bytes{0});
            for (const auto& b : jt.at("inputs")) t.inputs.push_back(buffer(b));
            for (const auto& b : jt.at("outputs")) t.outputs.push_back(buffer(b));
            t.allowed_cores = jt.value("allowed_cores", std::vector<std::string>{});
            if (jt.contains("max_start_lag") && !jt["max_start_lag"].is_null())
                t.max_start_lag = jt["max_start_lag"].get<Cycles>();
            t.group = jt.value("group", t.id);
            TaskId id = g.tasks.size();
            for (BufferId b : t.outputs) {
                if (g.buffers[b].definer)
                    throw DiagnosticError("graph dump: buffer '" + g.buffers[b].id + "' has two definers");
                g.buffers[b].definer = id;
            }
            g.tasks.push_back(std::move(t));
        }
        g.rebuild_observers();
        for (const auto& jc : j.value("bound_constraints", json::array())) {
            manifest::TimingEquationDoc c;
            c.name = jc.at("name").get<std::string>();
            c.equation_text = jc.at("equation").get<std::string>();
            c.equation = manifest::parse_equation(c.equation_text);
            c.bindings = jc.at("bindings").get<std::map<std::string, std::string>>();
            g.bound_constraints.push_back(std::move(c));
        }
        return g;
    } catch (const json::exception& e) {
        throw DiagnosticError(std::string("graph dump: ") + e.what());
    }
}

}  // namespace ddtwin::elab
