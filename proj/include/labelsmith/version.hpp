#pragma once

namespace labelsmith {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace labelsmith
