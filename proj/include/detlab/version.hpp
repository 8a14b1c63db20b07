#pragma once

namespace detlab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace detlab
