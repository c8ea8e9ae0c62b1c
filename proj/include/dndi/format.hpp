#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>

namespace dndi {

/// Text form used for every floating-point field written to disk (9
/// significant digits).
inline std::string render_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

/// The value a reader of `render_number(v)` recovers.
inline double quantize(double v) { return std::strtod(render_number(v).c_str(), nullptr); }

} // namespace dndi
