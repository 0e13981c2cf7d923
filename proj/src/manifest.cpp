#include "ddtwin/manifest.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cctype>
#include <limits>
#include <set>
#include <sstream>

namespace ddtwin::manifest {

const char* to_string(RelOp op) {
    switch (op) {
        case RelOp::Lt: return "<";
        case RelOp::Le: return "<=";
        case RelOp::Eq: return "=";
        case RelOp::Ge: return ">=";
        case RelOp::Gt: return ">";
    }
    return "=";
}

bool compare(std::int64_t lhs, RelOp op, std::int64_t rhs) {
    switch (op) {
        case RelOp::Lt: return lhs < rhs;
        case RelOp::Le: return lhs <= rhs;
        case RelOp::Eq: return lhs == rhs;
        case RelOp::Ge: return lhs >= rhs;
        case RelOp::Gt: return lhs > rhs;
    }
    return false;
}

const char* to_string(EqualityOp op) {
    switch (op) {
        case EqualityOp::Equal: return "equal";
        case EqualityOp::Le: return "le";
        case EqualityOp::Ge: return "ge";
    }
    return "equal";
}

// ---------------------------------------------------------------- equations

namespace {

struct EqLexer {
    std::string_view s;
    std::size_t pos = 0;

    void skip() {
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    [[noreturn]] void fail(const std::string& msg) const {
        throw DiagnosticError("unparseable equation '" + std::string(s) + "': " + msg + " at offset " +
                              std::to_string(pos));
    }
    bool at_end() {
        skip();
        return pos >= s.size();
    }
    std::optional<RelOp> relop() {
        skip();
        if (pos >= s.size()) return std::nullopt;
        auto two = s.substr(pos, 2);
        if (two == "<=") return pos += 2, RelOp::Le;
        if (two == ">=") return pos += 2, RelOp::Ge;
        if (two == "==") return pos += 2, RelOp::Eq;
        switch (s[pos]) {
            case '<': ++pos; return RelOp::Lt;
            case '>': ++pos; return RelOp::Gt;
            case '=': ++pos; return RelOp::Eq;
            default: return std::nullopt;
        }
    }
    bool punct(char c) {
        skip();
        if (pos < s.size() && s[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }
    std::optional<std::string> ident() {
        skip();
        if (pos >= s.size() || !(std::isalpha(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
            return std::nullopt;
        std::size_t b = pos;
        while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) ++pos;
        return std::string(s.substr(b, pos - b));
    }
    std::optional<std::int64_t> integer() {
        skip();
        if (pos >= s.size() || !std::isdigit(static_cast<unsigned char>(s[pos]))) return std::nullopt;
        std::int64_t v = 0;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
            if (__builtin_mul_overflow(v, 10, &v) || __builtin_add_overflow(v, s[pos] - '0', &v))
                fail("integer overflow");
            ++pos;
        }
        return v;
    }
};

void add_product(LinearTerm& t, const std::string& name, std::int64_t coeff) {
    for (auto& [n, c] : t.products) {
        if (n == name) {
            c += coeff;
            return;
        }
    }
    t.products.emplace_back(name, coeff);
}

LinearTerm parse_term(EqLexer& lx) {
    LinearTerm t;
    int sign = 1;
    if (lx.punct('-')) sign = -1;
    for (;;) {
        if (auto id = lx.ident()) {
            std::int64_t coeff = 1;
            if (lx.punct('*')) {
                auto v = lx.integer();
                if (!v) lx.fail("expected integer coefficient after '*'");
                coeff = *v;
            }
            add_product(t, *id, sign * coeff);
        } else if (auto v = lx.integer()) {
            if (lx.punct('*')) {
                auto id2 = lx.ident();
                if (!id2) lx.fail("expected placeholder after '*'");
                add_product(t, *id2, sign * *v);
            } else {
                t.constant += sign * *v;
            }
        } else {
            lx.fail("expected placeholder or integer");
        }
        if (lx.punct('+')) sign = 1;
        else if (lx.punct('-')) sign = -1;
        else break;
    }
    return t;
}

}  // namespace

Equation parse_equation(std::string_view text) {
    EqLexer lx{text};
    Equation eq;
    eq.terms.push_back(parse_term(lx));
    while (auto op = lx.relop()) {
        eq.ops.push_back(*op);
        eq.terms.push_back(parse_term(lx));
    }
    if (!lx.at_end()) lx.fail("unexpected character '" + std::string(1, text[lx.pos]) + "'");
    if (eq.ops.empty()) lx.fail("expected at least one comparison");
    return eq;
}

std::string to_string(const Equation& eq) {
    std::ostringstream os;
    auto term = [&os](const LinearTerm& t) {
        bool first = true;
        for (const auto& [name, coeff] : t.products) {
            std::int64_t c = coeff;
            if (!first) os << (c < 0 ? " - " : " + ");
            else if (c < 0) os << '-';
            if (c < 0) c = -c;
            os << name;
            if (c != 1) os << '*' << c;
            first = false;
        }
        if (t.constant != 0 || first) {
            std::int64_t c = t.constant;
            if (!first) os << (c < 0 ? " - " : " + ");
            else if (c < 0) os << '-';
            os << (c < 0 ? -c : c);
        }
    };
    for (std::size_t i = 0; i < eq.terms.size(); ++i) {
        if (i) os << ' ' << to_string(eq.ops[i - 1]) << ' ';
        term(eq.terms[i]);
    }
    return os.str();
}

bool evaluate_timing_equation(const TimingEquationDoc& doc, const std::map<std::string, std::int64_t>& assignment) {
    auto value = [&](const LinearTerm& t) {
        std::int64_t v = t.constant;
        for (const auto& [ph, coeff] : t.products) {
            auto b = doc.bindings.find(ph);
            if (b == doc.bindings.end())
                throw DiagnosticError("equation '" + doc.name + "': placeholder '" + ph + "' has no binding");
            auto a = assignment.find(b->second);
            if (a == assignment.end())
                throw DiagnosticError("equation '" + doc.name + "': symbol '" + b->second + "' has no value");
            std::int64_t p = 0;
            if (__builtin_mul_overflow(a->second, coeff, &p) || __builtin_add_overflow(v, p, &v))
                throw DiagnosticError("equation '" + doc.name + "': integer overflow");
        }
        return v;
    };
    // Evaluate every term first so a missing symbol is reported even when an
    // earlier comparison already fails.
    std::vector<std::int64_t> values;
    values.reserve(doc.equation.terms.size());
    for (const auto& t : doc.equation.terms) values.push_back(value(t));
    for (std::size_t i = 0; i + 1 < values.size(); ++i)
        if (!compare(values[i], doc.equation.ops[i], values[i + 1])) return false;
    return true;
}

// ---------------------------------------------------------------- YAML helpers

namespace {

std::string lower_kind(std::string s) {
    for (auto& c : s) c = c == '_' ? ' ' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

struct DocContext {
    std::string file;
    std::string label;  // "document 2 (Modem_Period)"

    [[noreturn]] void fail(const YAML::Node& at, const std::string& msg) const {
        SourceLoc loc;
        if (at.IsDefined() && at.Mark().line >= 0) loc = {at.Mark().line + 1, at.Mark().column + 1};
        throw DiagnosticError(file, loc, label + ": " + msg);
    }
};

const YAML::Node required(const YAML::Node& map, const char* key, const DocContext& ctx) {
    if (!map.IsMap()) ctx.fail(map, "expected a mapping");
    YAML::Node n = map[key];
    if (!n.IsDefined() || n.IsNull()) ctx.fail(map, std::string("missing required field '") + key + "'");
    return n;
}

std::int64_t as_int(const YAML::Node& n, const char* what, const DocContext& ctx) {
    if (!n.IsScalar()) ctx.fail(n, std::string("field '") + what + "' must be an integer");
    try {
        return n.as<std::int64_t>();
    } catch (const YAML::Exception&) {
        ctx.fail(n, std::string("field '") + what + "' must be an integer, got '" + n.Scalar() + "'");
    }
}

std::string as_str(const YAML::Node& n, const char* what, const DocContext& ctx) {
    if (!n.IsScalar()) ctx.fail(n, std::string("field '") + what + "' must be a scalar");
    return n.Scalar();
}

void check_unit(const YAML::Node& spec, const DocContext& ctx) {
    YAML::Node u = spec["unit"];
    if (!u.IsDefined()) return;
    std::string unit = as_str(u, "unit", ctx);
    if (unit != "clock") ctx.fail(u, "unsupported unit '" + unit + "' (only 'clock')");
}

std::vector<YAML::Node> load_all(std::string_view text, std::string_view file) {
    try {
        return YAML::LoadAll(std::string(text));
    } catch (const YAML::ParserException& e) {
        throw DiagnosticError(std::string(file), SourceLoc{e.mark.line + 1, e.mark.column + 1}, e.msg);
    }
}

TimingEqualityDoc parse_equality(const std::string& name, const YAML::Node& spec, const DocContext& ctx) {
    TimingEqualityDoc d;
    d.name = name;
    d.variable_name = as_str(required(spec, "variable_name", ctx), "variable_name", ctx);
    YAML::Node c = required(spec, "constraint", ctx);
    std::string op = as_str(c, "constraint", ctx);
    if (op == "equal" || op == "eq") d.op = EqualityOp::Equal;
    else if (op == "le" || op == "less_equal") d.op = EqualityOp::Le;
    else if (op == "ge" || op == "greater_equal") d.op = EqualityOp::Ge;
    else ctx.fail(c, "unknown constraint '" + op + "'");
    YAML::Node v = required(spec, "value", ctx);
    d.value = as_int(v, "value", ctx);
    if (d.value < 0) ctx.fail(v, "value must be >= 0");
    check_unit(spec, ctx);
    return d;
}

void collect_placeholders(const Equation& eq, std::set<std::string>& out) {
    for (const auto& t : eq.terms)
        for (const auto& [n, c] : t.products) out.insert(n);
}

TimingEquationDoc parse_equation_doc(const std::string& name, const YAML::Node& spec, const DocContext& ctx) {
    TimingEquationDoc d;
    d.name = name;
    YAML::Node e = required(spec, "equation", ctx);
    d.equation_text = as_str(e, "equation", ctx);
    try {
        d.equation = parse_equation(d.equation_text);
    } catch (const DiagnosticError& err) {
        ctx.fail(e, err.diagnostics().front().message);
    }
    check_unit(spec, ctx);
    for (const auto& kv : spec) {
        auto key = kv.first.Scalar();
        if (key == "equation" || key == "unit") continue;
        d.bindings[key] = as_str(kv.second, key.c_str(), ctx);
    }
    std::set<std::string> used;
    collect_placeholders(d.equation, used);
    for (const auto& ph : used)
        if (!d.bindings.count(ph)) ctx.fail(e, "placeholder '" + ph + "' has no binding");
    for (const auto& [ph, sym] : d.bindings)
        if (!used.count(ph)) ctx.fail(spec, "binding '" + ph + "' does not appear in the equation");
    return d;
}

FunctionMetadata parse_sdk(const std::string& name, const YAML::Node& spec, const DocContext& ctx) {
    FunctionMetadata m;
    m.name = name;
    YAML::Node pats = spec["available patterns"];
    if (!pats.IsDefined()) pats = spec["available_patterns"];
    if (!pats.IsDefined() || pats.IsNull()) ctx.fail(spec, "missing required field 'available patterns'");
    if (!pats.IsSequence()) ctx.fail(pats, "'available patterns' must be a list");
    for (const auto& p : pats) m.available_patterns.push_back(as_str(p, "available patterns", ctx));
    if (m.available_patterns.empty()) ctx.fail(pats, "'available patterns' must not be empty");
    m.elementsize = as_int(required(spec, "elementsize", ctx), "elementsize", ctx);
    m.internalsize = as_int(required(spec, "internalsize", ctx), "internalsize", ctx);
    m.runtime = as_int(required(spec, "runtime", ctx), "runtime", ctx);
    if (m.elementsize < 0) ctx.fail(spec["elementsize"], "elementsize must be >= 0");
    if (m.internalsize < 0) ctx.fail(spec["internalsize"], "internalsize must be >= 0");
    if (m.runtime <= 0) ctx.fail(spec["runtime"], "runtime must be > 0");
    return m;
}

}  // namespace

std::vector<ConstraintDoc> parse_constraint_stream(std::string_view text, std::string_view file) {
    std::vector<ConstraintDoc> out;
    auto docs = load_all(text, file);
    int index = 0;
    for (YAML::Node doc : docs) {
        ++index;
        if (doc.IsNull()) continue;
        DocContext ctx{std::string(file), "document " + std::to_string(index)};
        if (!doc.IsMap()) ctx.fail(doc, "expected a mapping");
        std::string name;
        if (doc["metadata"].IsMap() && doc["metadata"]["name"].IsScalar()) {
            name = doc["metadata"]["name"].Scalar();
            ctx.label += " (" + name + ")";
        }
        std::string api = as_str(required(doc, "apiVersion", ctx), "apiVersion", ctx);
        if (api != kApiVersion) ctx.fail(doc["apiVersion"], "unknown apiVersion '" + api + "'");
        std::string kind = as_str(required(doc, "kind", ctx), "kind", ctx);
        if (name.empty()) ctx.fail(doc, "missing required field 'metadata.name'");
        YAML::Node spec = required(doc, "spec", ctx);
        if (!spec.IsMap()) ctx.fail(spec, "'spec' must be a mapping");
        std::string k = lower_kind(kind);
        if (k == "timing equality") out.emplace_back(parse_equality(name, spec, ctx));
        else if (k == "timing equation") out.emplace_back(parse_equation_doc(name, spec, ctx));
        else if (k == "sdk") out.emplace_back(parse_sdk(name, spec, ctx));
        else ctx.fail(doc["kind"], "unknown kind '" + kind + "'");
    }
    return out;
}

// ---------------------------------------------------------------- topology

const char* to_string(MemoryLevel level) {
    switch (level) {
        case MemoryLevel::L2: return "L2";
        case MemoryLevel::L3: return "L3";
        case MemoryLevel::DDR: return "DDR";
    }
    return "L3";
}

const char* to_string(PatternClass c) {
    switch (c) {
        case PatternClass::Pipeline: return "pipeline";
        case PatternClass::L2toL2: return "L2toL2";
        case PatternClass::BigDelay: return "big_delay";
    }
    return "pipeline";
}

const Memory* HardwareTopology::find_memory(std::string_view id) const {
    for (const auto& m : memories)
        if (m.id == id) return &m;
    return nullptr;
}

std::optional<std::size_t> HardwareTopology::core_index(std::string_view id) const {
    for (std::size_t i = 0; i < cores.size(); ++i)
        if (cores[i].id == id) return i;
    return std::nullopt;
}

Bytes HardwareTopology::max_capacity() const {
    Bytes m = 0;
    for (const auto& mem : memories) m = std::max(m, mem.capacity);
    return m;
}

std::map<PatternClass, ClassCost> HardwareTopology::default_costs() {
    return {
        {PatternClass::Pipeline, ClassCost{0, std::nullopt}},
        {PatternClass::L2toL2, ClassCost{200, 64}},
        {PatternClass::BigDelay, ClassCost{1000, 16}},
    };
}

namespace {

std::optional<PatternClass> class_from_key(std::string_view key) {
    auto c = canonical_name(key);
    if (c == "pipeline") return PatternClass::Pipeline;
    if (c == "l2tol2") return PatternClass::L2toL2;
    if (c == "big.delay") return PatternClass::BigDelay;
    return std::nullopt;
}

}  // namespace

HardwareTopology parse_topology(std::string_view yaml_text, std::string_view file) {
    auto docs = load_all(yaml_text, file);
    if (docs.size() != 1 || !docs[0].IsMap())
        throw DiagnosticError(std::string(file), {}, "topology: expected exactly one YAML mapping document");
    const YAML::Node& doc = docs[0];
    DocContext ctx{std::string(file), "topology"};
    HardwareTopology topo;
    if (doc["clock_hz"].IsDefined()) topo.clock_hz = as_int(doc["clock_hz"], "clock_hz", ctx);
    if (topo.clock_hz <= 0) ctx.fail(doc["clock_hz"], "clock_hz must be > 0");

    YAML::Node mems = required(doc, "memories", ctx);
    if (!mems.IsSequence()) ctx.fail(mems, "'memories' must be a list");
    std::set<std::string> ids;
    for (const auto& m : mems) {
        Memory mem;
        mem.id = as_str(required(m, "id", ctx), "id", ctx);
        std::string level = as_str(required(m, "level", ctx), "level", ctx);
        if (level == "L2") mem.level = MemoryLevel::L2;
        else if (level == "L3") mem.level = MemoryLevel::L3;
        else if (level == "DDR") mem.level = MemoryLevel::DDR;
        else ctx.fail(m["level"], "unknown memory level '" + level + "'");
        mem.capacity = as_int(required(m, "capacity", ctx), "capacity", ctx);
        mem.bandwidth = as_int(required(m, "bandwidth", ctx), "bandwidth", ctx);
        if (m["latency"].IsDefined()) mem.latency = as_int(m["latency"], "latency", ctx);
        if (mem.capacity <= 0) ctx.fail(m, "memory '" + mem.id + "': capacity must be > 0");
        if (mem.bandwidth <= 0) ctx.fail(m, "memory '" + mem.id + "': bandwidth must be > 0");
        if (mem.latency < 0) ctx.fail(m, "memory '" + mem.id + "': latency must be >= 0");
        if (!ids.insert(mem.id).second) ctx.fail(m, "duplicate memory id '" + mem.id + "'");
        topo.memories.push_back(std::move(mem));
    }

    YAML::Node cores = doc["cores"];
    if (cores.IsDefined() && !cores.IsNull()) {
        if (!cores.IsSequence()) ctx.fail(cores, "'cores' must be a list");
        std::set<std::string> cids;
        for (const auto& c : cores) {
            Core core;
            core.id = as_str(required(c, "id", ctx), "id", ctx);
            core.l2 = as_str(required(c, "l2", ctx), "l2", ctx);
            core.l3 = as_str(required(c, "l3", ctx), "l3", ctx);
            const Memory* l2 = topo.find_memory(core.l2);
            const Memory* l3 = topo.find_memory(core.l3);
            if (!l2 || l2->level != MemoryLevel::L2)
                ctx.fail(c, "core '" + core.id + "': attached L2 '" + core.l2 + "' does not exist");
            if (!l3 || l3->level != MemoryLevel::L3)
                ctx.fail(c, "core '" + core.id + "': attached L3 '" + core.l3 + "' does not exist");
            if (!cids.insert(core.id).second) ctx.fail(c, "duplicate core id '" + core.id + "'");
            topo.cores.push_back(std::move(core));
        }
    }

    if (YAML::Node pc = doc["pattern_costs"]; pc.IsDefined() && !pc.IsNull()) {
        if (!pc.IsMap()) ctx.fail(pc, "'pattern_costs' must be a mapping");
        for (const auto& kv : pc) {
            auto cls = class_from_key(kv.first.Scalar());
            if (!cls) ctx.fail(kv.first, "unknown pattern class '" + kv.first.Scalar() + "'");
            ClassCost cost;
            cost.base = as_int(required(kv.second, "base", ctx), "base", ctx);
            if (cost.base < 0) ctx.fail(kv.second, "base must be >= 0");
            if (kv.second["bandwidth"].IsDefined()) {
                cost.bandwidth = as_int(kv.second["bandwidth"], "bandwidth", ctx);
                if (*cost.bandwidth <= 0) ctx.fail(kv.second, "bandwidth must be > 0");
            }
            topo.pattern_costs[*cls] = cost;
        }
    }
    return topo;
}

// ---------------------------------------------------------------- patterns

std::string canonical_name(std::string_view name) {
    std::vector<std::string> toks;
    std::string cur;
    auto flush = [&] {
        if (cur.empty()) return;
        bool digits = std::all_of(cur.begin(), cur.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
        if (digits && !toks.empty()) toks.back() += "#" + cur;
        else toks.push_back(cur);
        cur.clear();
    };
    for (char c : name) {
        if (c == '.' || c == '_') flush();
        else cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    flush();
    std::string out;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        if (i) out += '.';
        out += toks[i];
    }
    return out;
}

std::string share_element_name(std::size_t slot) {
    static const char* levels[] = {"L2", "L3"};
    static const char* sides[] = {"II", "IO", "OI", "OO"};
    return std::string("shares_") + levels[slot / 4] + "_" + sides[slot % 4] + "_with";
}

PatternCatalog::PatternCatalog(std::vector<Pattern> patterns) : patterns_(std::move(patterns)) {
    for (std::size_t i = 0; i < patterns_.size(); ++i) {
        auto key = canonical_name(patterns_[i].name);
        if (!by_canonical_.emplace(key, i).second)
            throw DiagnosticError("duplicate pattern name '" + patterns_[i].name + "'");
    }
}

std::optional<std::size_t> PatternCatalog::index_of(std::string_view name) const {
    auto it = by_canonical_.find(canonical_name(name));
    if (it == by_canonical_.end()) return std::nullopt;
    return it->second;
}

const Pattern* PatternCatalog::find(std::string_view name) const {
    auto i = index_of(name);
    return i ? &patterns_[*i] : nullptr;
}

void PatternCatalog::check_references(std::string_view file) const {
    std::vector<Diagnostic> diags;
    auto check = [&](const Pattern& p, const std::vector<std::string>& members, const std::string& where) {
        for (const auto& m : members)
            if (!index_of(m))
                diags.push_back({Severity::Error, {}, "pattern '" + p.name + "': " + where +
                                                          " references unknown pattern '" + m + "'",
                                 std::string(file)});
    };
    for (const auto& p : patterns_) {
        check(p, p.exclusive_define_with, "exclusive_define_with");
        for (std::size_t s = 0; s < p.shares.size(); ++s) check(p, p.shares[s], share_element_name(s));
        check(p, p.can_observe, "can_observe");
    }
    if (!diags.empty()) throw DiagnosticError(std::move(diags));
}

void PatternCatalog::check_against(const HardwareTopology& topo, std::string_view file) const {
    std::vector<Diagnostic> diags;
    for (const auto& p : patterns_) {
        for (const auto* mem : {&p.defining_memory, &p.observing_memory})
            if (!topo.find_memory(*mem))
                diags.push_back({Severity::Error, {}, "pattern '" + p.name + "': anchor memory '" + *mem +
                                                          "' does not exist in the topology",
                                 std::string(file)});
    }
    if (!diags.empty()) throw DiagnosticError(std::move(diags));
}

std::optional<PatternTraits> classify_pattern(std::string_view name) {
    auto canon = canonical_name(name);
    std::vector<std::string> toks;
    std::stringstream ss(canon);
    for (std::string t; std::getline(ss, t, '.');) toks.push_back(t);
    if (toks.empty()) return std::nullopt;
    PatternTraits tr;
    std::size_t next = 1;
    if (toks[0] == "pipeline") tr.cls = PatternClass::Pipeline;
    else if (toks[0] == "l2tol2") tr.cls = PatternClass::L2toL2;
    else if (toks[0] == "big" && toks.size() > 1 && toks[1] == "delay") tr.cls = PatternClass::BigDelay, next = 2;
    else return std::nullopt;
    if (next < toks.size()) tr.core = toks[next];
    return tr;
}

Cycles transfer_cost(PatternClass cls, Bytes size, const HardwareTopology& topo) {
    auto it = topo.pattern_costs.find(cls);
    if (it == topo.pattern_costs.end())
        throw DiagnosticError(std::string("no cost entry for pattern class '") + to_string(cls) + "'");
    const ClassCost& c = it->second;
    if (!c.bandwidth || size <= 0) return c.base;
    return c.base + (size + *c.bandwidth - 1) / *c.bandwidth;
}

Cycles transfer_cost(const Pattern& p, Bytes size, const HardwareTopology& topo) {
    auto tr = classify_pattern(p.name);
    if (!tr) throw DiagnosticError("unknown pattern class for '" + p.name + "'");
    return transfer_cost(tr->cls, size, topo);
}

PatternCatalog generate_patterns_from_topology(const HardwareTopology& topo) {
    struct Anchors {
        std::array<std::optional<std::string>, 2> in;   // indexed by SharedLevel
        std::array<std::optional<std::string>, 2> out;
        std::string core;
    };
    std::vector<Pattern> patterns;
    std::vector<Anchors> anchors;
    std::vector<const Memory*> ddrs;
    for (const auto& m : topo.memories)
        if (m.level == MemoryLevel::DDR) ddrs.push_back(&m);

    for (const auto& core : topo.cores) {
        const std::string& l3 = core.l3;
        const std::string port = "acc" + l3;
        auto add = [&](std::string name, std::optional<std::string> out_l2) {
            Pattern p;
            p.name = std::move(name);
            p.defining_memory = l3;
            p.observing_memory = l3;
            patterns.push_back(std::move(p));
            Anchors a;
            a.in[0] = core.l2;
            a.out[0] = std::move(out_l2);
            a.core = core.id;
            anchors.push_back(std::move(a));
        };
        const std::string base = core.id + "." + l3;
        for (const auto* ddr : ddrs) {
            add("big_delay." + base + "." + ddr->id + "." + l3, port);
            add("big_delay." + base + "." + ddr->id + "." + port, port);
        }
        add("pipeline." + base, core.l2);
        add("L2toL2." + base + "." + port, port);
    }

    for (std::size_t i = 0; i < patterns.size(); ++i) {
        for (std::size_t j = 0; j < patterns.size(); ++j) {
            if (anchors[i].core == anchors[j].core) patterns[i].exclusive_define_with.push_back(patterns[j].name);
            if (patterns[i].observing_memory == patterns[j].defining_memory)
                patterns[i].can_observe.push_back(patterns[j].name);
            for (std::size_t level = 0; level < 2; ++level) {
                const auto* mine = &anchors[i];
                const auto* theirs = &anchors[j];
                const std::array<std::pair<const std::optional<std::string>*, const std::optional<std::string>*>, 4> pairs{{
                    {&mine->in[level], &theirs->in[level]},
                    {&mine->in[level], &theirs->out[level]},
                    {&mine->out[level], &theirs->in[level]},
                    {&mine->out[level], &theirs->out[level]},
                }};
                for (std::size_t s = 0; s < 4; ++s) {
                    const auto& [a, b] = pairs[s];
                    if (*a && *b && **a == **b) patterns[i].shares[level * 4 + s].push_back(patterns[j].name);
                }
            }
        }
    }
    return PatternCatalog(std::move(patterns));
}

}  // namespace ddtwin::manifest
