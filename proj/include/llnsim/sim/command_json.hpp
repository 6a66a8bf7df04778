#pragma once

#include <string>

#include <json.hpp>

#include "llnsim/sim/scenario.hpp"

namespace llnsim::sim {

/// Parses {"cmd": "move_mote", "id": 2, "position": [x, y]},
/// {"cmd": "inject_failure", "link": [a, b]} / {"cmd": "inject_failure", "mote": a}
/// or {"cmd": "global_repair"}. Throws ScenarioError prefixed with `where`.
Command command_from_json(const nlohmann::json& c, const std::string& where);

}  // namespace llnsim::sim
