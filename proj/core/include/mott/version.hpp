#pragma once

namespace mott {

inline constexpr const char* kVersion = "0.3.0";

} // namespace mott
