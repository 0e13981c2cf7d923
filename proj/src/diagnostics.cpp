#include "ddtwin/diagnostics.hpp"

#include <sstream>

namespace ddtwin {

const char* to_string(Severity s) {
    switch (s) {
        case Severity::Error: return "error";
        case Severity::Warning: return "warning";
        case Severity::Note: return "note";
    }
    return "error";
}

std::string Diagnostic::render() const {
    std::ostringstream os;
    os << (file.empty() ? "<input>" : file);
    if (loc.line > 0) os << ':' << loc.line << ':' << loc.column;
    os << ": " << to_string(severity) << ": " << message;
    return os.str();
}

DiagnosticError::DiagnosticError(std::vector<Diagnostic> diags)
    : std::runtime_error(summarize(diags)), diags_(std::move(diags)) {}

DiagnosticError::DiagnosticError(std::string file, SourceLoc loc, std::string message)
    : DiagnosticError(std::vector<Diagnostic>{
          Diagnostic{Severity::Error, loc, std::move(message), std::move(file)}}) {}

DiagnosticError::DiagnosticError(std::string message)
    : DiagnosticError(std::vector<Diagnostic>{
          Diagnostic{Severity::Error, {}, std::move(message), {}}}) {}

std::string DiagnosticError::summarize(const std::vector<Diagnostic>& diags) {
    std::ostringstream os;
    for (std::size_t i = 0; i < diags.size(); ++i) {
        if (i) os << '\n';
        os << diags[i].render();
    }
    return os.str();
}

}  // namespace ddtwin
