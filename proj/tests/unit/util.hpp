#pragma once

#include <fstream>
#include <sstream>
#include <string>

inline std::string slurp(const std::string& rel) {
    std::ifstream f(std::string(DDTWIN_DATA) + "/" + rel, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}
