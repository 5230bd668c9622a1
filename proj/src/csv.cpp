#include "koopman/csv.hpp"

#include <cerrno>
#include <cstdlib>

#include "koopman/errors.hpp"

namespace koopman::csv {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

double parse_double(const std::string& field, long line_number) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(field.c_str(), &end);
    if (end == field.c_str() || *end != '\0' || errno == ERANGE)
        throw ParseError("not a number: '" + field + "'", line_number);
    return v;
}

long parse_long(const std::string& field, long line_number) {
    errno = 0;
    char* end = nullptr;
    const long v = std::strtol(field.c_str(), &end, 10);
    if (end == field.c_str() || *end != '\0' || errno == ERANGE)
        throw ParseError("not an integer: '" + field + "'", line_number);
    return v;
}

}  // namespace koopman::csv
