#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ddtwin {

using Cycles = std::int64_t;
using Bytes = std::int64_t;

enum class Severity { Error, Warning, Note };

// Locations never take part in structural AST equality; a pretty-printed and
// re-parsed AST compares equal to the original.
struct SourceLoc {
    int line = 0;
    int column = 0;

    friend bool operator==(const SourceLoc&, const SourceLoc&) { return true; }
};

struct Diagnostic {
    Severity severity = Severity::Error;
    SourceLoc loc;
    std::string message;
    std::string file;

    // "file:line:col: error: message"
    [[nodiscard]] std::string render() const;
};

const char* to_string(Severity s);

// Thrown by every parser and validator that rejects its input. Carries all
// diagnostics gathered before giving up.
class DiagnosticError : public std::runtime_error {
public:
    explicit DiagnosticError(std::vector<Diagnostic> diags);
    DiagnosticError(std::string file, SourceLoc loc, std::string message);
    explicit DiagnosticError(std::string message);

    [[nodiscard]] const std::vector<Diagnostic>& diagnostics() const noexcept { return diags_; }

private:
    static std::string summarize(const std::vector<Diagnostic>& diags);
    std::vector<Diagnostic> diags_;
};

}  // namespace ddtwin
