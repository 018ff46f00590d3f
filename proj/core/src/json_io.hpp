#pragma once

// JSON conversions shared by the store manifest and the project configuration.

#include "microsa/experiment.hpp"

#include <nlohmann/json.hpp>

namespace microsa::detail {

nlohmann::json grid_to_json(const GridSpec& grid);
/// Missing keys keep the desk defaults; malformed values raise ConfigError.
GridSpec grid_from_json(const nlohmann::json& j);

} // namespace microsa::detail
