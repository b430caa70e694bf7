#pragma once

namespace sembench {

inline constexpr const char* kVersion = "0.1.0";

} // namespace sembench
