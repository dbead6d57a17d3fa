#pragma once

namespace lczgrid {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace lczgrid
