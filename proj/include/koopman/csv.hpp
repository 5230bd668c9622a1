// csv.hpp — CSV formatting/parsing helpers shared by dataset and report writers
#pragma once

#include <cstdio>
#include <string>
#include <vector>

namespace koopman::csv {

// 17 significant digits: enough to round-trip an IEEE double exactly.
inline std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline std::string fmt(int x) { return std::to_string(x); }
inline std::string fmt(long x) { return std::to_string(x); }
inline std::string fmt(std::size_t x) { return std::to_string(x); }
inline std::string fmt(const std::string& x) { return x; }
inline std::string fmt(const char* x) { return x; }

inline void join_into(std::string&) {}

template <typename T, typename... Rest>
void join_into(std::string& out, const T& first, const Rest&... rest) {
    out += fmt(first);
    if constexpr (sizeof...(rest) > 0) out += ',';
    join_into(out, rest...);
}

// One CSV row (no trailing newline).
template <typename... Fields>
std::string row(const Fields&... fields) {
    std::string out;
    join_into(out, fields...);
    return out;
}

std::vector<std::string> split(const std::string& line, char sep = ',');

// Parses a double, throwing koopman::ParseError on garbage.
double parse_double(const std::string& field, long line_number);
long parse_long(const std::string& field, long line_number);

}  // namespace koopman::csv
