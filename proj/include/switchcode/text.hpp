#pragma once

#include <cstdio>
#include <string>

namespace switchcode {

/// Shortest representation with 17 significant digits; round-trips exactly.
inline std::string g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace switchcode
