#pragma once

// Canonical JSON rendering and content digests for reports.
//
// Canonical form: object keys sorted, two-space indentation, arrays of scalars
// on one line, floats printed with 17 significant digits (always containing a
// '.' or exponent so they re-parse as floats). Parsing canonical output and
// rendering it again yields the same bytes.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <span>
#include <string>

#include <json.hpp>

namespace pano::io {

using Json = nlohmann::json;

inline std::uint64_t fnv1a64(std::span<const unsigned char> bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::string format_double(double v) {
    if (!std::isfinite(v)) return "null";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    std::string s = buf;
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

namespace detail {

inline bool is_scalar(const Json& j) { return !j.is_object() && !j.is_array(); }

inline void render(const Json& j, std::string& out, int depth) {
    const std::string pad(2 * (depth + 1), ' ');
    const std::string close_pad(2 * depth, ' ');
    switch (j.type()) {
        case Json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            for (const auto& [key, value] : j.items()) {  // std::map keeps keys sorted
                if (!first) out += ",\n";
                first = false;
                out += pad + Json(key).dump() + ": ";
                render(value, out, depth + 1);
            }
            out += "\n" + close_pad + "}";
            return;
        }
        case Json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            bool flat = true;
            for (const auto& e : j) flat = flat && is_scalar(e);
            if (flat) {
                out += "[";
                for (std::size_t i = 0; i < j.size(); ++i) {
                    if (i) out += ", ";
                    render(j[i], out, depth + 1);
                }
                out += "]";
                return;
            }
            out += "[\n";
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) out += ",\n";
                out += pad;
                render(j[i], out, depth + 1);
            }
            out += "\n" + close_pad + "]";
            return;
        }
        case Json::value_t::number_float:
            out += format_double(j.get<double>());
            return;
        default:
            out += j.dump();
            return;
    }
}

}  // namespace detail

/// Canonical text of `j`, newline-terminated.
inline std::string canonical_dump(const Json& j) {
    std::string out;
    detail::render(j, out, 0);
    out += "\n";
    return out;
}

}  // namespace pano::io
