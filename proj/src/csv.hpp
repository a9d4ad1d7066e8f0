#pragma once

// Minimal comma-separated reader shared by the polar, wind and log loaders.
// No quoting: none of the formats we read carry commas inside fields.

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include "windrl/error.hpp"

namespace windrl::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> lines;  // 1-based source line of each row
};

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

inline Table read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open " + path);
    Table t;
    std::string line;
    std::size_t n = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++n;
        if (trim(line).empty()) continue;
        if (!have_header) {
            t.header = split(line);
            have_header = true;
            continue;
        }
        t.rows.push_back(split(line));
        t.lines.push_back(n);
    }
    if (!have_header) fail(ErrorCode::EmptySeries, path + " is empty");
    return t;
}

inline void expect_header(const Table& t, std::initializer_list<const char*> names) {
    std::size_t i = 0;
    for (const char* name : names) {
        if (i >= t.header.size() || t.header[i] != name) {
            throw ParseError(1, std::string("expected column '") + name + "'");
        }
        ++i;
    }
}

inline double parse_double(const std::string& field, std::size_t line) {
    if (field.empty()) throw ParseError(line, "empty field");
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(field.c_str(), &end);
    if (end == field.c_str() || *end != '\0' || errno == ERANGE) throw ParseError(line, "bad number '" + field + "'");
    return v;
}

}  // namespace windrl::csv
