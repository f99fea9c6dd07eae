#pragma once

namespace orbf {

inline constexpr const char* kVersion = "0.1.0";

} // namespace orbf
