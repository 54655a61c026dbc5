#pragma once

namespace tibandit {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace tibandit
