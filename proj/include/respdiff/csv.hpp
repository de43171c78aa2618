#pragma once

#include <charconv>
#include <cstdint>
#include <string>

namespace respdiff::csv {

// Shortest round-trip decimal form, '.' separator, locale-free.
inline std::string field(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

inline std::string field(std::int64_t v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

inline std::string field(const std::string& v) { return v; }

template <typename... Ts>
void append_row(std::string& out, const Ts&... cells) {
    int i = 0;
    ((out += (i++ ? "," : "") + field(cells)), ...);
    out += '\n';
}

}  // namespace respdiff::csv
