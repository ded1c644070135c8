#pragma once

namespace peel {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace peel
