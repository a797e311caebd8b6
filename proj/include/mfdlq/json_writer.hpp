#pragma once

#include <cmath>
#include <cstdio>
#include <string>

#include "json.hpp"

namespace mfdlq::io {

using ordered_json = nlohmann::ordered_json;

/// Decimal text for a double with 17 significant digits ("%.17g"), so every
/// value round-trips and output is byte-stable.
inline std::string format_double(double v) {
    if (!std::isfinite(v)) return "null";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline bool is_flat(const ordered_json& j) {
    for (const auto& e : j)
        if (e.is_structured()) return false;
    return true;
}

inline void write(std::string& out, const ordered_json& j, int indent, int depth) {
    const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
    const std::string close_pad(static_cast<std::size_t>(indent * depth), ' ');
    switch (j.type()) {
        case ordered_json::value_t::number_float:
            out += format_double(j.get<double>());
            return;
        case ordered_json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out += ",\n";
                first = false;
                out += pad;
                out += ordered_json(it.key()).dump();
                out += ": ";
                write(out, it.value(), indent, depth + 1);
            }
            out += "\n" + close_pad + "}";
            return;
        }
        case ordered_json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            if (is_flat(j)) {
                out += "[";
                bool first = true;
                for (const auto& e : j) {
                    if (!first) out += ", ";
                    first = false;
                    write(out, e, indent, depth + 1);
                }
                out += "]";
                return;
            }
            out += "[\n";
            bool first = true;
            for (const auto& e : j) {
                if (!first) out += ",\n";
                first = false;
                out += pad;
                write(out, e, indent, depth + 1);
            }
            out += "\n" + close_pad + "]";
            return;
        }
        default:
            out += j.dump();
            return;
    }
}

}  // namespace detail

/// Serializes with insertion-ordered keys, flat arrays on one line, LF endings,
/// and 17-significant-digit floats. Output ends with a newline.
inline std::string dump(const ordered_json& j, int indent = 2) {
    std::string out;
    detail::write(out, j, indent, 0);
    out += "\n";
    return out;
}

}  // namespace mfdlq::io
