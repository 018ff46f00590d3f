#pragma once

#include <charconv>
#include <string>
#include <string_view>
#include <vector>

namespace microsa::textio {

/// Shortest decimal representation that round-trips exactly.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::vector<std::string> split(std::string_view line, char sep);
double parse_double(std::string_view s);
long long parse_int(std::string_view s);

} // namespace microsa::textio
