#pragma once

#define FRAILTYFA_VERSION_MAJOR 0
#define FRAILTYFA_VERSION_MINOR 1
#define FRAILTYFA_VERSION_PATCH 0

namespace frailtyfa {
inline constexpr const char* kVersion = "0.1.0";
}
