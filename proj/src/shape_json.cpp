#include "coevo/shape_json.hpp"

#include "coevo/error.hpp"

namespace coevo::shape {

namespace {

std::string_view end_name(ChainEnd end) { return end == ChainEnd::Head ? "head" : "tail"; }

ChainEnd end_from(const Json& j) {
    const std::string s = require_string(j, "end");
    if (s == "head") return ChainEnd::Head;
    if (s == "tail") return ChainEnd::Tail;
    throw Error(ErrorCode::ParseError, "end must be \"head\" or \"tail\"");
}

}  // namespace

Json design_to_json(const Design& design) {
    Json angles = Json::array();
    double length = kDefaultBrickLength;
    double thickness = kDefaultBrickThickness;
    Vec2 anchor;
    if (design) {
        for (const Brick& b : design->bricks()) angles.push_back(b.rel_angle.radians());
        length = design->brick_length();
        thickness = design->brick_thickness();
        anchor = design->anchor();
    }
    return {{"brick_length", length},
            {"brick_thickness", thickness},
            {"anchor", {anchor.x, anchor.y}},
            {"angles", std::move(angles)}};
}

Json with_design_defaults(Json j) {
    if (!j.is_object()) return j;
    if (!j.contains("brick_length")) j["brick_length"] = kDefaultBrickLength;
    if (!j.contains("brick_thickness")) j["brick_thickness"] = kDefaultBrickThickness;
    if (!j.contains("anchor")) j["anchor"] = Json::array({0.0, 0.0});
    return j;
}

Design design_from_json(const Json& j) {
    const double length = require_number(j, "brick_length");
    const double thickness = require_number(j, "brick_thickness");
    const Json& anchor = require(j, "anchor");
    if (!anchor.is_array() || anchor.size() != 2 || !anchor[0].is_number() || !anchor[1].is_number())
        throw Error(ErrorCode::ParseError, "anchor must be [x, y]");
    const Json& angles = require(j, "angles");
    if (!angles.is_array()) throw Error(ErrorCode::ParseError, "angles must be an array");
    if (angles.empty()) return std::nullopt;
    std::vector<Brick> bricks;
    bricks.reserve(angles.size());
    for (const Json& a : angles) {
        if (!a.is_number()) throw Error(ErrorCode::ParseError, "angles must be numbers");
        bricks.push_back({Angle::from_radians(a.get<double>())});
    }
    return BrickChain({anchor[0].get<double>(), anchor[1].get<double>()}, std::move(bricks), length,
                      thickness);
}

BrickChain chain_from_json(const Json& j) {
    Design d = design_from_json(j);
    if (!d) throw Error(ErrorCode::EmptyChain, "design has no bricks");
    return *std::move(d);
}

std::string design_hash(const BrickChain& chain) { return content_hash(design_to_json(chain)); }

Json action_to_json(const Action& action) {
    return std::visit(
        [](const auto& a) -> Json {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, AddBrick>)
                return {{"type", "add"}, {"end", end_name(a.end)}, {"angle", a.rel_angle.radians()}};
            else if constexpr (std::is_same_v<T, RemoveBrick>)
                return {{"type", "remove"}, {"end", end_name(a.end)}};
            else
                return {{"type", "rotate"}, {"index", a.index}, {"angle", a.new_rel_angle.radians()}};
        },
        action);
}

Action action_from_json(const Json& j) {
    const std::string type = require_string(j, "type");
    if (type == "add") return AddBrick{end_from(j), Angle::from_radians(require_number(j, "angle"))};
    if (type == "remove") return RemoveBrick{end_from(j)};
    if (type == "rotate") {
        const long long index = require_integer(j, "index");
        if (index < 0) throw Error(ErrorCode::IndexOutOfRange, "brick index must be non-negative");
        return RotateBrick{static_cast<std::size_t>(index),
                           Angle::from_radians(require_number(j, "angle"))};
    }
    throw Error(ErrorCode::ParseError, "unknown action type '" + type + "'");
}

std::string_view to_string(ActorKind kind) { return kind == ActorKind::Human ? "human" : "agent"; }

ActorKind actor_kind_from_string(std::string_view s) {
    if (s == "human") return ActorKind::Human;
    if (s == "agent") return ActorKind::Agent;
    throw Error(ErrorCode::ParseError, "actor kind must be \"human\" or \"agent\"");
}

Json actor_to_json(const ActorId& actor) { return {{"kind", to_string(actor.kind)}, {"id", actor.id}}; }

ActorId actor_from_json(const Json& j) {
    ActorId actor{actor_kind_from_string(require_string(j, "kind")), require_string(j, "id")};
    if (actor.id.empty()) throw Error(ErrorCode::ParseError, "actor id must not be empty");
    return actor;
}

Json log_entry_to_json(const LogEntry& entry) {
    return {{"seq", entry.seq}, {"actor", actor_to_json(entry.actor)}, {"action", action_to_json(entry.action)}};
}

LogEntry log_entry_from_json(const Json& j) {
    const long long seq = require_integer(j, "seq");
    if (seq < 0) throw Error(ErrorCode::ParseError, "seq must be non-negative");
    return {static_cast<std::uint64_t>(seq), actor_from_json(require(j, "actor")),
            action_from_json(require(j, "action"))};
}

Json log_to_json(const ActionLog& log) {
    Json entries = Json::array();
    for (const LogEntry& e : log.entries) entries.push_back(log_entry_to_json(e));
    return {{"session_id", log.session_id}, {"challenge_id", log.challenge_id}, {"entries", std::move(entries)}};
}

ActionLog log_from_json(const Json& j) {
    ActionLog log{require_string(j, "session_id"), require_string(j, "challenge_id"), {}};
    const Json& entries = require(j, "entries");
    if (!entries.is_array()) throw Error(ErrorCode::ParseError, "entries must be an array");
    for (const Json& e : entries) log.entries.push_back(log_entry_from_json(e));
    return log;
}

}  // namespace coevo::shape
