#pragma once

namespace rdslin {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace rdslin
