#pragma once

namespace pacr {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace pacr
