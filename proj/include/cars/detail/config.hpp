#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "cars/detail/csv.hpp"
#include "cars/error.hpp"

namespace cars::detail {

/// Flat `key = value` file; `#` starts a comment, blank lines are skipped,
/// duplicate keys are rejected.
using KeyValues = std::map<std::string, std::string, std::less<>>;

inline KeyValues read_key_values(std::istream& in) {
    KeyValues kv;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view view(line);
        if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
        view = trim(view);
        if (view.empty()) continue;
        const auto eq = view.find('=');
        if (eq == std::string_view::npos)
            throw Error(ErrorKind::BadConfig, "expected key=value at line " + std::to_string(lineno), lineno);
        std::string key(trim(view.substr(0, eq)));
        std::string value(trim(view.substr(eq + 1)));
        if (key.empty()) throw Error(ErrorKind::BadConfig, "empty key at line " + std::to_string(lineno), lineno);
        if (!kv.emplace(key, value).second)
            throw Error(ErrorKind::BadConfig, "duplicate key '" + key + "'", lineno);
    }
    return kv;
}

inline KeyValues read_key_values_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open config " + path);
    return read_key_values(in);
}

inline double config_real(std::string_view key, std::string_view text) {
    auto v = parse_double(text);
    if (!v) throw Error(ErrorKind::BadConfig, "'" + std::string(key) + "' is not a number: " + std::string(text));
    return *v;
}

inline std::uint64_t config_unsigned(std::string_view key, std::string_view text) {
    text = trim(text);
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
        throw Error(ErrorKind::BadConfig,
                    "'" + std::string(key) + "' is not a non-negative integer: " + std::string(text));
    return value;
}

inline std::vector<std::string> config_list(std::string_view text) {
    auto items = split_fields(text, ',');
    for (const auto& item : items)
        if (item.empty()) throw Error(ErrorKind::BadConfig, "empty item in list: " + std::string(text));
    return items;
}

}  // namespace cars::detail
