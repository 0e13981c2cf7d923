#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <algorithm>
#include <cctype>
#include <sstream>

#include "ddtwin/manifest.hpp"

namespace ddtwin::manifest {

namespace pt = boost::property_tree;

namespace {

std::string trimmed(const std::string& s) {
    auto b = std::find_if_not(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
    auto e = std::find_if_not(s.rbegin(), s.rend(), [](unsigned char c) { return std::isspace(c); }).base();
    return b < e ? std::string(b, e) : std::string();
}

[[noreturn]] void fail(std::string_view file, const std::string& msg) {
    throw DiagnosticError(std::string(file), {}, msg);
}

std::vector<std::string> member_list(const pt::ptree& node, const std::string& pattern, const std::string& element,
                                     std::string_view file) {
    std::vector<std::string> out;
    std::string text = trimmed(node.data());
    if (!text.empty() && text != "...")
        fail(file, "pattern '" + pattern + "': unexpected text '" + text + "' in <" + element + ">");
    for (const auto& [key, child] : node) {
        if (key == "<xmlcomment>") continue;
        if (key != "member")
            fail(file, "pattern '" + pattern + "': unexpected element <" + key + "> in <" + element + ">");
        std::string name = trimmed(child.data());
        if (name.empty()) fail(file, "pattern '" + pattern + "': empty <member> in <" + element + ">");
        if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
    }
    return out;
}

Pattern read_pattern(const pt::ptree& node, std::string_view file) {
    Pattern p;
    auto name = node.get_optional<std::string>("<xmlattr>.name");
    if (!name || trimmed(*name).empty()) fail(file, "<pattern> element without a name attribute");
    p.name = trimmed(*name);
    bool have_def = false;
    bool have_obs = false;
    for (const auto& [key, child] : node) {
        if (key == "<xmlattr>" || key == "<xmlcomment>") continue;
        if (key == "defining_memory") {
            p.defining_memory = trimmed(child.data());
            have_def = !p.defining_memory.empty();
        } else if (key == "observing_memory") {
            p.observing_memory = trimmed(child.data());
            have_obs = !p.observing_memory.empty();
        } else if (key == "exclusive_define_with") {
            p.exclusive_define_with = member_list(child, p.name, key, file);
        } else if (key == "can_observe") {
            p.can_observe = member_list(child, p.name, key, file);
        } else {
            bool matched = false;
            for (std::size_t s = 0; s < p.shares.size(); ++s) {
                if (key == share_element_name(s)) {
                    p.shares[s] = member_list(child, p.name, key, file);
                    matched = true;
                }
            }
            if (!matched) fail(file, "pattern '" + p.name + "': unknown element <" + key + ">");
        }
    }
    if (!have_def) fail(file, "pattern '" + p.name + "': missing anchor memory <defining_memory>");
    if (!have_obs) fail(file, "pattern '" + p.name + "': missing anchor memory <observing_memory>");
    return p;
}

void write_members(std::ostringstream& os, const char* element, const std::vector<std::string>& members) {
    if (members.empty()) {
        os << "  <" << element << "/>\n";
        return;
    }
    os << "  <" << element << ">\n";
    for (const auto& m : members) os << "    <member>" << m << "</member>\n";
    os << "  </" << element << ">\n";
}

}  // namespace

PatternCatalog parse_pattern_catalog(std::string_view xml_text, std::string_view file, ReferenceCheck check) {
    pt::ptree tree;
    if (trimmed(std::string(xml_text)).empty()) return {};
    try {
        std::istringstream in{std::string(xml_text)};
        pt::read_xml(in, tree);
    } catch (const pt::xml_parser_error& e) {
        throw DiagnosticError(std::string(file), SourceLoc{static_cast<int>(e.line()), 0}, e.message());
    }
    std::vector<Pattern> patterns;
    auto take = [&](const pt::ptree& parent) {
        for (const auto& [key, child] : parent) {
            if (key == "<xmlcomment>" || key == "<xmlattr>") continue;
            if (key != "pattern") fail(file, "unexpected element <" + key + "> in pattern catalog");
            patterns.push_back(read_pattern(child, file));
        }
    };
    for (const auto& [key, child] : tree) {
        if (key == "<xmlcomment>") continue;
        if (key == "pattern") patterns.push_back(read_pattern(child, file));
        else if (key == "patterns" || key == "catalog") take(child);
        else fail(file, "unexpected top-level element <" + key + ">");
    }
    std::vector<std::string> seen;
    for (const auto& p : patterns) {
        auto c = canonical_name(p.name);
        if (std::find(seen.begin(), seen.end(), c) != seen.end()) fail(file, "duplicate pattern name '" + p.name + "'");
        seen.push_back(c);
    }
    PatternCatalog catalog(std::move(patterns));
    if (check == ReferenceCheck::Resolve) catalog.check_references(file);
    return catalog;
}

std::string write_pattern_catalog(const PatternCatalog& catalog) {
    std::ostringstream os;
    os << "<patterns>\n";
    for (const auto& p : catalog.patterns()) {
        os << "<pattern name=\"" << p.name << "\">\n";
        os << "  <defining_memory>" << p.defining_memory << "</defining_memory>\n";
        os << "  <observing_memory>" << p.observing_memory << "</observing_memory>\n";
        write_members(os, "exclusive_define_with", p.exclusive_define_with);
        for (std::size_t s = 0; s < p.shares.size(); ++s)
            write_members(os, share_element_name(s).c_str(), p.shares[s]);
        write_members(os, "can_observe", p.can_observe);
        os << "</pattern>\n";
    }
    os << "</patterns>\n";
    return os.str();
}

}  // namespace ddtwin::manifest
