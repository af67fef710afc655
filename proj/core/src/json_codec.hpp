#pragma once

#include <json.hpp>

#include "tomo/phantom.hpp"

namespace tomo::detail {

nlohmann::json phantom_to_json_value(const PhantomSpec& spec);
PhantomSpec phantom_from_json_value(const nlohmann::json& value);

}  // namespace tomo::detail
