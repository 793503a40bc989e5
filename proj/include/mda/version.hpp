#pragma once

namespace mda {

inline constexpr const char* tool_version = "1.0.0";

}  // namespace mda
