#pragma once

#include <string>
#include <string_view>

#include "coevo/json_util.hpp"
#include "coevo/shape.hpp"

namespace coevo::shape {

// {"brick_length", "brick_thickness", "anchor": [x, y], "angles": [rad...]}.
// An empty "angles" array encodes the empty design.
Json design_to_json(const Design& design);
Design design_from_json(const Json& j);
// Same as design_from_json but rejects the empty design with EmptyChain.
BrickChain chain_from_json(const Json& j);
// Fills absent brick_length, brick_thickness and anchor with the defaults.
// Non-objects are returned unchanged.
Json with_design_defaults(Json j);

std::string design_hash(const BrickChain& chain);

Json action_to_json(const Action& action);
Action action_from_json(const Json& j);

std::string_view to_string(ActorKind kind);
ActorKind actor_kind_from_string(std::string_view s);
Json actor_to_json(const ActorId& actor);
ActorId actor_from_json(const Json& j);

Json log_entry_to_json(const LogEntry& entry);
LogEntry log_entry_from_json(const Json& j);
Json log_to_json(const ActionLog& log);
ActionLog log_from_json(const Json& j);

}  // namespace coevo::shape
