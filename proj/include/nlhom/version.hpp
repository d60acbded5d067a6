#pragma once

namespace nlhom {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace nlhom
