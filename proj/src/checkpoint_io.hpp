#pragma once

// Internal helpers shared by the cnn and mlp checkpoint code paths.

#include <charconv>
#include <cstdio>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "emu/errors.hpp"

namespace emu::detail {

inline void append_real17(std::string& out, double v) {
    char buf[64];
    const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
    out.append(buf, buf + n);
}

struct CkptReader {
    std::istream& in;
    int line_no = 0;

    std::string next_line() {
        std::string line;
        if (!std::getline(in, line))
            throw ParseError("checkpoint truncated after line " + std::to_string(line_no));
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
    }

    // Expects "<key>=<space-separated reals>" with exactly `count` values.
    std::vector<double> values_line(std::string_view key, std::size_t count) {
        const std::string line = next_line();
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos || std::string_view(line).substr(0, eq) != key)
            throw ParseError("line " + std::to_string(line_no) + ": expected '" +
                             std::string(key) + "=', got '" + line + "'");
        std::vector<double> vals;
        const char* p = line.data() + eq + 1;
        const char* end = line.data() + line.size();
        while (p != end) {
            while (p != end && *p == ' ') ++p;
            if (p == end) break;
            double v = 0.0;
            const auto [next, ec] = std::from_chars(p, end, v);
            if (ec != std::errc{})
                throw ParseError("line " + std::to_string(line_no) +
                                 ": cannot parse real value");
            vals.push_back(v);
            p = next;
        }
        if (vals.size() != count)
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(count) + " values for " + std::string(key) +
                             ", got " + std::to_string(vals.size()));
        return vals;
    }

    std::string text_line(std::string_view key) {
        const std::string line = next_line();
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos || std::string_view(line).substr(0, eq) != key)
            throw ParseError("line " + std::to_string(line_no) + ": expected '" +
                             std::string(key) + "=', got '" + line + "'");
        return line.substr(eq + 1);
    }
};

}  // namespace emu::detail
