#pragma once

// nlohmann/json, vendored single header.
#include <json.hpp>

namespace copref {
using json = nlohmann::json;
}  // namespace copref
