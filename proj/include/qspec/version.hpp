#pragma once

#include <string_view>

namespace qspec {
inline constexpr std::string_view version = "0.1.0";
}
