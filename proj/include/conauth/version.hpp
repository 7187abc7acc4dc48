#pragma once

namespace conauth {

inline constexpr const char* kVersion = "0.1.0";

// bumped whenever a serialized artifact layout changes
inline constexpr int kModelFormatVersion = 1;

}  // namespace conauth
