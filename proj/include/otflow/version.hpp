#pragma once

namespace otflow {
inline constexpr const char* kToolVersion = "0.1.0";
}
