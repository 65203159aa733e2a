#pragma once

#include "gpudse/config_io.hpp"

#include <cstdint>
#include <limits>
#include <string>

namespace gpudse::detail {

using nlohmann::json;

inline std::string child_path(const std::string& parent, const std::string& key) {
    return parent.empty() ? key : parent + "." + key;
}

inline const json& require_field(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.is_object()) throw ParseError(path.empty() ? "expected an object" : path + ": expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError("missing field '" + child_path(path, key) + "'");
    return *it;
}

inline std::uint64_t get_u64(const json& obj, const std::string& key, const std::string& path,
                             std::uint64_t max = std::numeric_limits<std::uint64_t>::max()) {
    const json& v = require_field(obj, key, path);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
        throw ParseError("field '" + child_path(path, key) + "' must be a non-negative integer");
    }
    const auto x = v.get<std::uint64_t>();
    if (x > max) throw ParseError("field '" + child_path(path, key) + "' is out of range");
    return x;
}

inline std::uint32_t get_u32(const json& obj, const std::string& key, const std::string& path) {
    return static_cast<std::uint32_t>(get_u64(obj, key, path, std::numeric_limits<std::uint32_t>::max()));
}

inline double get_double(const json& obj, const std::string& key, const std::string& path) {
    const json& v = require_field(obj, key, path);
    if (!v.is_number()) throw ParseError("field '" + child_path(path, key) + "' must be a number");
    return v.get<double>();
}

inline std::string get_string(const json& obj, const std::string& key, const std::string& path) {
    const json& v = require_field(obj, key, path);
    if (!v.is_string()) throw ParseError("field '" + child_path(path, key) + "' must be a string");
    return v.get<std::string>();
}

}  // namespace gpudse::detail
