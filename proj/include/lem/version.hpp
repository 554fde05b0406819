#pragma once

namespace lem {

inline constexpr const char* kVersion = "lem-toolkit 0.1.0";

}  // namespace lem
