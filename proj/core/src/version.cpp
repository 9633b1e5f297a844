#include "umr/version.hpp"

namespace umr {

std::string_view engine_version() noexcept { return UMR_VERSION; }

}  // namespace umr
