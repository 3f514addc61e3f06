#pragma once

#include <string_view>

namespace gspot {

inline constexpr std::string_view kToolkitVersion = "0.1.0";

}  // namespace gspot
