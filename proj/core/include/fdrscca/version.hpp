#pragma once

namespace fdrscca {

inline constexpr const char* kVersion = "0.3.0";

}  // namespace fdrscca
