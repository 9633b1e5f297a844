#pragma once

#include <string_view>

namespace umr {

std::string_view engine_version() noexcept;

}  // namespace umr
