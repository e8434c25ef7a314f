#pragma once

// Plain-text key=value files: one pair per line, '#' starts a comment,
// surrounding whitespace is ignored.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <system_error>

#include "rwpm/errors.hpp"

namespace rwpm {

using KeyValues = std::map<std::string, std::string>;

namespace detail {
inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}
} // namespace detail

inline KeyValues parse_key_values(std::istream& in) {
    KeyValues out;
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw FormatError("line " + std::to_string(lineno) + ": expected key=value, got '" + line + "'");
        auto key = detail::trim(line.substr(0, eq));
        auto value = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw FormatError("line " + std::to_string(lineno) + ": empty key");
        if (!out.emplace(key, value).second)
            throw FormatError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    return out;
}

inline KeyValues parse_key_values(const std::string& text) {
    std::istringstream in(text);
    return parse_key_values(in);
}

inline KeyValues read_key_value_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    return parse_key_values(in);
}

inline double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used == value.size()) return v;
    } catch (const std::exception&) {
    }
    throw ParameterError("'" + key + "' expects a real number, got '" + value + "'");
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    std::uint64_t v = 0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, v);
    if (ec != std::errc{} || ptr != end || value.empty())
        throw ParameterError("'" + key + "' expects a non-negative integer, got '" + value + "'");
    return v;
}

} // namespace rwpm
