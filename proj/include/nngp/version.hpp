#pragma once

namespace nngp {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace nngp
