#pragma once

#include <charconv>
#include <string>

namespace clab::io {

// Shortest round-trip decimal form; keeps emitted CSV/config bytes stable
// across runs of the same build.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return {buf, res.ptr};
}

} // namespace clab::io
