#include "ddtwin/dsl.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <functional>
#include <set>
#include <sstream>

namespace ddtwin::dsl {

const char* to_string(Direction d) {
    switch (d) {
        case Direction::In: return "in";
        case Direction::Out: return "out";
        case Direction::Internal: return "internal";
    }
    return "internal";
}

const StreamDecl* FlowDef::find_stream(std::string_view stream) const {
    for (const auto& p : params)
        if (p.name == stream) return &p;
    for (const auto& s : internals)
        if (s.name == stream) return &s;
    return nullptr;
}

SymbolTable::SymbolTable(std::map<std::string, std::int64_t> entries) {
    for (const auto& [k, v] : entries) set(k, v);
}

void SymbolTable::set(const std::string& name, std::int64_t value) {
    if (value <= 0)
        throw DiagnosticError("symbol '" + name + "' must be strictly positive, got " +
                              std::to_string(value));
    entries_[name] = value;
}

std::optional<std::int64_t> SymbolTable::lookup(std::string_view name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::int64_t> evaluate(const Expr& e, const SymbolTable& symbols) {
    if (e.is_literal()) return e.literal();
    return symbols.lookup(e.name());
}

namespace {

enum class Tok { Ident, Int, Colon, Comma, LBracket, RBracket, LBrace, RBrace, Equals, Newline, End };

const char* describe(Tok t) {
    switch (t) {
        case Tok::Ident: return "identifier";
        case Tok::Int: return "integer";
        case Tok::Colon: return "':'";
        case Tok::Comma: return "','";
        case Tok::LBracket: return "'['";
        case Tok::RBracket: return "']'";
        case Tok::LBrace: return "'{'";
        case Tok::RBrace: return "'}'";
        case Tok::Equals: return "'='";
        case Tok::Newline: return "end of line";
        case Tok::End: return "end of input";
    }
    return "token";
}

struct Token {
    Tok kind = Tok::End;
    std::string text;
    SourceLoc loc;
};

class Lexer {
public:
    Lexer(std::string_view text, std::string file) : src_(text), file_(std::move(file)) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        std::vector<Token> open;  // unclosed brackets
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == '%') {
                while (pos_ < src_.size() && src_[pos_] != '\n') advance();
                continue;
            }
            if (c == '\n') {
                if (open.empty() && !out.empty() && out.back().kind != Tok::Newline)
                    out.push_back({Tok::Newline, "\n", here()});
                advance();
                continue;
            }
            if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
                continue;
            }
            SourceLoc loc = here();
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                std::size_t b = pos_;
                while (pos_ < src_.size() &&
                       (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                    advance();
                out.push_back({Tok::Ident, std::string(src_.substr(b, pos_ - b)), loc});
                continue;
            }
            if (std::isdigit(static_cast<unsigned char>(c))) {
                std::size_t b = pos_;
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                    advance();
                if (pos_ < src_.size() &&
                    (std::isalpha(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                    diags_.push_back({Severity::Error, loc, "malformed number", file_});
                out.push_back({Tok::Int, std::string(src_.substr(b, pos_ - b)), loc});
                continue;
            }
            Tok kind;
            switch (c) {
                case ':': kind = Tok::Colon; break;
                case ',': kind = Tok::Comma; break;
                case '[': kind = Tok::LBracket; break;
                case ']': kind = Tok::RBracket; break;
                case '{': kind = Tok::LBrace; break;
                case '}': kind = Tok::RBrace; break;
                case '=': kind = Tok::Equals; break;
                default:
                    diags_.push_back({Severity::Error, loc,
                                      std::string("unexpected character '") + c + "'", file_});
                    advance();
                    continue;
            }
            advance();
            Token t{kind, std::string(1, c), loc};
            if (kind == Tok::LBracket || kind == Tok::LBrace) {
                open.push_back(t);
            } else if (kind == Tok::RBracket || kind == Tok::RBrace) {
                Tok want = kind == Tok::RBracket ? Tok::LBracket : Tok::LBrace;
                if (open.empty() || open.back().kind != want) {
                    diags_.push_back({Severity::Error, loc,
                                      std::string("unbalanced '") + c + "'", file_});
                } else {
                    open.pop_back();
                }
            }
            out.push_back(std::move(t));
        }
        for (const auto& o : open)
            diags_.push_back({Severity::Error, o.loc,
                              "unterminated block: '" + o.text + "' is never closed", file_});
        if (!out.empty() && out.back().kind != Tok::Newline) out.push_back({Tok::Newline, "\n", here()});
        out.push_back({Tok::End, "", here()});
        return out;
    }

    std::vector<Diagnostic>& diagnostics() { return diags_; }

private:
    SourceLoc here() const { return {line_, col_}; }
    void advance() {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    std::string_view src_;
    std::string file_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
    std::vector<Diagnostic> diags_;
};

struct SyntaxError {
    SourceLoc loc;
    std::string message;
};

class Parser {
public:
    Parser(std::vector<Token> toks, std::string file) : toks_(std::move(toks)), file_(std::move(file)) {}

    std::vector<FlowDef> run() {
        std::vector<FlowDef> flows;
        std::set<std::string> names;
        skip_newlines();
        while (peek().kind != Tok::End) {
            try {
                if (!(peek().kind == Tok::Ident && peek().text == "Flow"))
                    fail(peek(), "unknown keyword '" + peek().text + "': expected 'Flow'");
                FlowDef f = flow();
                if (!names.insert(f.name).second) {
                    diags_.push_back({Severity::Error, f.loc, "duplicate flow name '" + f.name + "'", file_});
                } else {
                    flows.push_back(std::move(f));
                }
            } catch (const SyntaxError& e) {
                diags_.push_back({Severity::Error, e.loc, e.message, file_});
                recover();
            }
            skip_newlines();
        }
        return flows;
    }

    std::vector<Diagnostic>& diagnostics() { return diags_; }

private:
    const Token& peek(std::size_t ahead = 0) const {
        return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
    }
    const Token& next() {
        const Token& t = toks_[pos_];
        if (pos_ + 1 < toks_.size()) ++pos_;
        return t;
    }
    [[noreturn]] void fail(const Token& t, std::string msg) { throw SyntaxError{t.loc, std::move(msg)}; }
    const Token& expect(Tok kind, std::string_view what) {
        if (peek().kind != kind)
            fail(peek(), "expected " + std::string(what) + ", found " + shown(peek()));
        return next();
    }
    static std::string shown(const Token& t) {
        if (t.kind == Tok::Ident || t.kind == Tok::Int) return "'" + t.text + "'";
        return describe(t.kind);
    }
    void skip_newlines() {
        while (peek().kind == Tok::Newline) next();
    }
    void recover() {
        while (peek().kind != Tok::End && peek().kind != Tok::Newline) next();
        // Skip the rest of the broken flow so that one error yields one diagnostic.
        while (peek().kind != Tok::End && !(peek().kind == Tok::Ident && peek().text == "Flow" &&
                                              peek().loc.column == 1)) {
            next();
        }
    }
    void end_of_statement() {
        if (peek().kind != Tok::Newline && peek().kind != Tok::End)
            fail(peek(), "unexpected " + shown(peek()) + " at end of statement");
        skip_newlines();
    }

    FlowDef flow() {
        const Token& kw = next();
        FlowDef f;
        f.loc = kw.loc;
        f.name = expect(Tok::Ident, "flow name").text;
        if (peek().kind != Tok::Newline && peek().kind != Tok::End)
            fail(peek(), "unexpected " + shown(peek()) + " after flow name '" + f.name + "'");
        skip_newlines();

        bool body_started = false;
        while (peek().kind != Tok::End && !(peek().kind == Tok::Ident && peek().text == "Flow")) {
            const Token& head = peek();
            if (head.kind != Tok::Ident) fail(head, "unexpected " + shown(head) + " at start of statement");
            if (peek(1).kind == Tok::Colon) {
                StreamDecl d = declaration();
                bool param;
                if (d.direction == Direction::Internal) {
                    param = false;
                } else if (explicit_type_) {
                    if (body_started)
                        fail(head, "stream '" + d.name + "' declared with type '" +
                                       to_string(d.direction) + "' after the flow body started");
                    param = true;
                } else {
                    param = head.loc.column > 1 && !body_started;
                    d.direction = param ? Direction::Out : Direction::Internal;
                }
                if (param) {
                    f.params.push_back(std::move(d));
                } else {
                    body_started = true;
                    f.internals.push_back(std::move(d));
                }
            } else if (peek(1).kind == Tok::LBracket) {
                body_started = true;
                f.instantiations.push_back(instantiation());
            } else {
                fail(head, "unknown keyword '" + head.text + "'");
            }
        }
        return f;
    }

    Expr expr(std::string_view what) {
        const Token& t = peek();
        if (t.kind == Tok::Int) {
            next();
            std::int64_t v = 0;
            auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
            if (ec != std::errc{}) fail(t, "integer literal out of range");
            return Expr{v, t.loc};
        }
        if (t.kind == Tok::Ident) {
            next();
            return Expr{t.text, t.loc};
        }
        fail(t, "expected " + std::string(what) + ", found " + shown(t));
    }

    StreamDecl declaration() {
        StreamDecl d;
        const Token& name = next();
        d.name = name.text;
        d.loc = name.loc;
        next();  // ':'
        const Token& kw = peek();
        if (!(kw.kind == Tok::Ident && kw.text == "stream"))
            fail(kw, "unknown keyword " + shown(kw) + ": expected 'stream'");
        next();
        while (peek().kind == Tok::LBracket) {
            const Token& open = next();
            if (peek().kind != Tok::Int && peek().kind != Tok::Ident)
                fail(open, "malformed shape bracket in declaration of '" + d.name + "'");
            d.shape.push_back(expr("dimension"));
            if (peek().kind != Tok::RBracket)
                fail(open, "malformed shape bracket in declaration of '" + d.name + "'");
            next();
        }
        explicit_type_ = false;
        d.direction = Direction::Out;
        if (peek().kind == Tok::LBrace) {
            next();
            while (peek().kind != Tok::RBrace) {
                const Token& key = expect(Tok::Ident, "attribute name");
                expect(Tok::Equals, "'='");
                const Token& val = peek();
                if (val.kind != Tok::Ident && val.kind != Tok::Int)
                    fail(val, "expected attribute value, found " + shown(val));
                next();
                if (key.text == "type") {
                    if (val.text == "in") d.direction = Direction::In;
                    else if (val.text == "out") d.direction = Direction::Out;
                    else if (val.text == "internal") d.direction = Direction::Internal;
                    else fail(val, "unknown stream type '" + val.text + "'");
                    explicit_type_ = true;
                } else if (key.text == "label") {
                    if (val.kind != Tok::Ident) fail(val, "label must be an identifier");
                    d.labels.push_back(val.text);
                } else {
                    d.attributes.emplace_back(key.text, val.text);
                }
                if (peek().kind == Tok::Comma) next();
                else if (peek().kind != Tok::RBrace) fail(peek(), "expected ',' or '}', found " + shown(peek()));
            }
            next();
        }
        end_of_statement();
        return d;
    }

    Instantiation instantiation() {
        Instantiation inst;
        const Token& callee = next();
        inst.callee = callee.text;
        inst.loc = callee.loc;
        next();  // '['
        while (peek().kind != Tok::RBracket) {
            const Token& lhs = expect(Tok::Ident, "iterator or formal name");
            expect(Tok::Equals, "'='");
            if (peek(1).kind == Tok::Colon && (peek().kind == Tok::Int || peek().kind == Tok::Ident)) {
                Iterator it{lhs.text, expr("lower bound"), {}, lhs.loc};
                next();  // ':'
                it.upper = expr("upper bound");
                inst.iterators.push_back(std::move(it));
            } else {
                const Token& s = expect(Tok::Ident, "stream reference");
                StreamRef ref{s.text, {}, s.loc};
                while (peek().kind == Tok::LBracket) {
                    next();
                    ref.indices.push_back(expr("index"));
                    expect(Tok::RBracket, "']'");
                }
                inst.bindings.push_back(Binding{lhs.text, std::move(ref), lhs.loc});
            }
            if (peek().kind == Tok::Comma) next();
            else if (peek().kind != Tok::RBracket) fail(peek(), "expected ',' or ']', found " + shown(peek()));
        }
        next();
        end_of_statement();
        return inst;
    }

    std::vector<Token> toks_;
    std::string file_;
    std::size_t pos_ = 0;
    bool explicit_type_ = false;
    std::vector<Diagnostic> diags_;
};

void print_expr(std::ostream& os, const Expr& e) {
    if (e.is_literal()) os << e.literal();
    else os << e.name();
}

}  // namespace

std::vector<FlowDef> parse_flow_source(std::string_view text, std::string_view file) {
    Lexer lexer(text, std::string(file));
    auto toks = lexer.run();
    if (!lexer.diagnostics().empty()) throw DiagnosticError(std::move(lexer.diagnostics()));
    Parser parser(std::move(toks), std::string(file));
    auto flows = parser.run();
    if (!parser.diagnostics().empty()) throw DiagnosticError(std::move(parser.diagnostics()));
    return flows;
}

std::string print_flows(const std::vector<FlowDef>& defs) {
    std::ostringstream os;
    auto decl = [&os](const StreamDecl& d, bool param) {
        if (param) os << "  ";
        os << d.name << " : stream";
        for (const auto& e : d.shape) {
            os << '[';
            print_expr(os, e);
            os << ']';
        }
        std::vector<std::string> attrs;
        attrs.push_back(std::string("type = ") + to_string(d.direction));
        for (const auto& l : d.labels) attrs.push_back("label = " + l);
        for (const auto& [k, v] : d.attributes) attrs.push_back(k + " = " + v);
        os << '{';
        for (std::size_t i = 0; i < attrs.size(); ++i) os << (i ? ", " : "") << attrs[i];
        os << "}\n";
    };
    for (std::size_t fi = 0; fi < defs.size(); ++fi) {
        const auto& f = defs[fi];
        if (fi) os << '\n';
        os << "Flow " << f.name << '\n';
        for (const auto& p : f.params) decl(p, true);
        for (const auto& s : f.internals) decl(s, false);
        for (const auto& inst : f.instantiations) {
            os << inst.callee << '[';
            bool first = true;
            for (const auto& it : inst.iterators) {
                os << (first ? "" : ", ") << it.var << " = ";
                print_expr(os, it.lower);
                os << ':';
                print_expr(os, it.upper);
                first = false;
            }
            for (const auto& b : inst.bindings) {
                os << (first ? "" : ", ") << b.formal << " = " << b.actual.stream;
                for (const auto& ix : b.actual.indices) {
                    os << '[';
                    print_expr(os, ix);
                    os << ']';
                }
                first = false;
            }
            os << "]\n";
        }
    }
    return os.str();
}

namespace {

class Validator {
public:
    Validator(const std::vector<FlowDef>& defs, const SymbolTable& symbols, std::string file)
        : defs_(defs), symbols_(symbols), file_(std::move(file)) {
        for (const auto& f : defs_)
            if (!by_name_.emplace(f.name, &f).second) error(f.loc, "duplicate flow name '" + f.name + "'");
    }

    std::vector<Diagnostic> run() {
        for (const auto& f : defs_) check_flow(f);
        check_recursion();
        return std::move(diags_);
    }

private:
    void error(SourceLoc loc, std::string msg) {
        diags_.push_back({Severity::Error, loc, std::move(msg), file_});
    }

    std::optional<std::int64_t> positive(const Expr& e, std::string_view what) {
        auto v = evaluate(e, symbols_);
        if (!v) {
            error(e.loc, "unresolved identifier '" + e.name() + "' in " + std::string(what));
            return std::nullopt;
        }
        if (*v <= 0) {
            error(e.loc, std::string(what) + " must be a positive integer, got " + std::to_string(*v));
            return std::nullopt;
        }
        return v;
    }

    std::optional<std::vector<std::int64_t>> shape_of(const StreamDecl& d) {
        std::vector<std::int64_t> dims;
        bool ok = true;
        for (const auto& e : d.shape) {
            auto v = positive(e, "shape of '" + d.name + "'");
            if (v) dims.push_back(*v);
            else ok = false;
        }
        if (!ok) return std::nullopt;
        return dims;
    }

    void check_flow(const FlowDef& f) {
        std::map<std::string, std::vector<std::int64_t>> shapes;
        std::set<std::string> seen;
        for (const auto* group : {&f.params, &f.internals}) {
            for (const auto& d : *group) {
                if (!seen.insert(d.name).second)
                    error(d.loc, "stream '" + d.name + "' declared twice in flow '" + f.name + "'");
                if (auto s = shape_of(d)) shapes[d.name] = *s;
            }
        }
        for (const auto& inst : f.instantiations) check_instantiation(f, inst, shapes);
    }

    void check_instantiation(const FlowDef& f, const Instantiation& inst,
                             const std::map<std::string, std::vector<std::int64_t>>& shapes) {
        std::map<std::string, std::pair<std::int64_t, std::int64_t>> ranges;
        for (const auto& it : inst.iterators) {
            if (ranges.count(it.var)) {
                error(it.loc, "iterator '" + it.var + "' declared twice");
                continue;
            }
            if (f.find_stream(it.var)) error(it.loc, "iterator '" + it.var + "' shadows a stream");
            auto lo = evaluate(it.lower, symbols_);
            auto hi = evaluate(it.upper, symbols_);
            if (!lo) error(it.lower.loc, "unresolved identifier '" + it.lower.name() + "' in iterator bound");
            if (!hi) error(it.upper.loc, "unresolved identifier '" + it.upper.name() + "' in iterator bound");
            if (!lo || !hi) {
                ranges[it.var] = {1, 0};
                continue;
            }
            if (*lo < 1 || *hi < *lo) {
                error(it.loc, "non-positive range for iterator '" + it.var + "': " + std::to_string(*lo) +
                                  ":" + std::to_string(*hi));
            }
            ranges[it.var] = {*lo, *hi};
        }

        const FlowDef* callee = nullptr;
        if (auto c = by_name_.find(inst.callee); c != by_name_.end()) callee = c->second;

        std::set<std::string> formals;
        for (const auto& b : inst.bindings) {
            if (!formals.insert(b.formal).second)
                error(b.loc, "formal '" + b.formal + "' bound twice in call to '" + inst.callee + "'");
            const StreamDecl* actual = f.find_stream(b.actual.stream);
            if (!actual) {
                error(b.actual.loc, "unresolved identifier '" + b.actual.stream + "' in flow '" + f.name + "'");
                continue;
            }
            auto sh = shapes.find(actual->name);
            if (b.actual.indices.size() > actual->shape.size()) {
                error(b.actual.loc, "shape-arity mismatch: '" + actual->name + "' has " +
                                        std::to_string(actual->shape.size()) + " dimension(s) but is indexed with " +
                                        std::to_string(b.actual.indices.size()));
                continue;
            }
            for (std::size_t k = 0; k < b.actual.indices.size(); ++k) {
                const Expr& ix = b.actual.indices[k];
                std::int64_t dim = sh != shapes.end() ? sh->second[k] : 0;
                if (ix.is_literal()) {
                    if (dim && (ix.literal() < 1 || ix.literal() > dim))
                        error(ix.loc, "index " + std::to_string(ix.literal()) + " out of range 1:" +
                                          std::to_string(dim) + " for '" + actual->name + "'");
                    continue;
                }
                auto r = ranges.find(ix.name());
                if (r == ranges.end()) {
                    error(ix.loc, "index '" + ix.name() + "' is not an iterator of this instantiation");
                    continue;
                }
                if (dim && r->second.first <= r->second.second &&
                    (r->second.first < 1 || r->second.second > dim))
                    error(ix.loc, "iterator '" + ix.name() + "' range " + std::to_string(r->second.first) + ":" +
                                      std::to_string(r->second.second) + " exceeds dimension " +
                                      std::to_string(dim) + " of '" + actual->name + "'");
            }
            if (!callee) continue;
            const StreamDecl* formal = nullptr;
            for (const auto& p : callee->params)
                if (p.name == b.formal) formal = &p;
            if (!formal) {
                error(b.loc, "flow '" + callee->name + "' has no parameter '" + b.formal + "'");
                continue;
            }
            if (formal->direction == Direction::Out && actual->direction == Direction::In)
                error(b.loc, "output parameter '" + b.formal + "' bound to input stream '" + actual->name + "'");
            auto fshape = shape_of(*formal);
            if (sh == shapes.end() || !fshape) continue;
            std::vector<std::int64_t> rest(sh->second.begin() + static_cast<std::ptrdiff_t>(b.actual.indices.size()),
                                           sh->second.end());
            if (rest != *fshape)
                error(b.loc, "shape-arity mismatch: slice of '" + actual->name + "' does not match the shape of parameter '" +
                                 b.formal + "' of flow '" + callee->name + "'");
        }
        if (callee) {
            for (const auto& p : callee->params)
                if (p.direction == Direction::In && !formals.count(p.name))
                    error(inst.loc, "input parameter '" + p.name + "' of flow '" + callee->name + "' is not bound");
        }
    }

    void check_recursion() {
        std::map<std::string, int> state;  // 1 visiting, 2 done
        std::function<void(const FlowDef&)> visit = [&](const FlowDef& f) {
            state[f.name] = 1;
            for (const auto& inst : f.instantiations) {
                auto c = by_name_.find(inst.callee);
                if (c == by_name_.end()) continue;
                int s = state[inst.callee];
                if (s == 1) error(inst.loc, "recursive instantiation of flow '" + inst.callee + "'");
                else if (s == 0) visit(*c->second);
            }
            state[f.name] = 2;
        };
        for (const auto& f : defs_)
            if (state[f.name] == 0) visit(f);
    }

    const std::vector<FlowDef>& defs_;
    const SymbolTable& symbols_;
    std::string file_;
    std::map<std::string, const FlowDef*> by_name_;
    std::vector<Diagnostic> diags_;
};

}  // namespace

void validate_flows(const std::vector<FlowDef>& defs, const SymbolTable& symbols, std::string_view file) {
    auto diags = Validator(defs, symbols, std::string(file)).run();
    if (!diags.empty()) throw DiagnosticError(std::move(diags));
}

std::map<std::string, LabeledStream> collect_labels(const std::vector<FlowDef>& defs, std::string_view file) {
    std::map<std::string, LabeledStream> out;
    std::vector<Diagnostic> diags;
    for (const auto& f : defs) {
        for (const auto* group : {&f.params, &f.internals}) {
            for (const auto& d : *group) {
                for (const auto& l : d.labels) {
                    auto [it, inserted] = out.emplace(l, LabeledStream{f.name, d.name});
                    if (!inserted)
                        diags.push_back({Severity::Error, d.loc,
                                         "duplicate label '" + l + "' (already on " + it->second.flow + "." +
                                             it->second.stream + ")",
                                         std::string(file)});
                }
            }
        }
    }
    if (!diags.empty()) throw DiagnosticError(std::move(diags));
    return out;
}

}  // namespace ddtwin::dsl
