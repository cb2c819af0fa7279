#include "coevo/challenges.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "coevo/error.hpp"
#include "coevo/shape_json.hpp"

namespace coevo::challenges {

using physics::Polygon;
using physics::RigidBody;
using physics::World;

namespace {

constexpr int kRoundSides = 16;

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorCode::InvalidSpec, msg); }

std::vector<Vec2> rect(double x0, double y0, double x1, double y1) {
    return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
}

Polygon make_polygon(const std::vector<Vec2>& points) {
    try {
        return Polygon::from_points(points);
    } catch (const Error& e) {
        invalid(e.what());
    }
}

double support_height(const Placement& p, double x) {
    return p.support_point.y + std::tan(p.support_angle) * (x - p.support_point.x);
}

ChallengeSpec collect_spec() {
    ChallengeSpec s;
    s.id = ChallengeId::Collect;
    s.episode_steps = 900;
    s.arena.push_back({rect(-15.0, -4.0, 15.0, -3.0), BodyTag::Ground, {0.5, 0.0}});
    for (int i = 0; i < 10; ++i) {
        SpawnBlueprint b;
        b.step = 30 * i;
        b.tag = BodyTag::Ball;
        b.position = {0.0, 8.0};
        b.jitter = {0.5, 0.0};
        b.radius = 0.15;
        b.material = {0.1, 0.5};
        s.spawns.push_back(b);
    }
    s.placement = {0.0, {0.0, 0.0}, 0.0, 0.0};
    s.design_dynamic = false;
    s.design_material = {0.5, 0.0};
    s.goal = CollectGoal{-1.0};
    return s;
}

ChallengeSpec protect_spec() {
    ChallengeSpec s;
    s.id = ChallengeId::Protect;
    s.episode_steps = 900;
    s.arena.push_back({rect(-15.0, -1.0, 15.0, 0.0), BodyTag::Ground, {0.5, 0.0}});
    const std::vector<Vec2> zone = rect(2.0, 0.0, 4.0, 1.0);
    s.arena.push_back({zone, BodyTag::Sensor, {}});
    for (int i = 0; i < 10; ++i) {
        SpawnBlueprint b;
        b.step = 45 * i;
        b.tag = BodyTag::Projectile;
        b.position = {-2.5, 2.3};
        b.velocity = {8.0, 0.0};
        b.jitter = {0.0, 0.3};
        b.radius = 0.1;
        b.material = {0.3, 0.2};
        s.spawns.push_back(b);
    }
    s.placement = {0.0, {0.0, 0.0}, 0.0, 0.0};
    s.design_dynamic = false;
    s.design_material = {0.5, 0.0};
    s.goal = ProtectGoal{zone, 10};
    return s;
}

ChallengeSpec move_spec() {
    ChallengeSpec s;
    s.id = ChallengeId::Move;
    s.episode_steps = 600;
    const double angle = -std::numbers::pi / 18.0;  // descends toward +x
    const Rot q(angle);
    // Top surface passes through the origin, from 30 units up-slope to 50 down.
    std::vector<Vec2> slab{q.apply({-30.0, -1.0}), q.apply({50.0, -1.0}), q.apply({50.0, 0.0}),
                           q.apply({-30.0, 0.0})};
    s.arena.push_back({slab, BodyTag::Ground, {0.9, 0.0}});
    const Vec2 along{std::cos(angle), std::sin(angle)};
    const Vec2 start = along * -4.0 * (1.0 / std::cos(angle));
    MoveGoal goal;
    goal.start = start;
    goal.target = start + along * 6.0;
    goal.incline_angle = -angle;
    s.placement = {start.x, start, angle, 0.01};
    s.design_dynamic = true;
    s.design_material = {0.9, 0.0};
    s.goal = goal;
    return s;
}

ChallengeSpec cut_spec() {
    ChallengeSpec s;
    s.id = ChallengeId::Cut;
    s.episode_steps = 600;
    const double half = 1.25;
    // A shaft between two ledges; the medium fills its top two units.
    s.arena.push_back({rect(-10.0, -8.0, -half, 0.0), BodyTag::Ground, {0.5, 0.0}});
    s.arena.push_back({rect(half, -8.0, 10.0, 0.0), BodyTag::Ground, {0.5, 0.0}});
    s.arena.push_back({rect(-10.0, -9.0, 10.0, -8.0), BodyTag::Ground, {0.5, 0.0}});
    s.arena.push_back({rect(-11.0, -9.0, -10.0, 10.0), BodyTag::Ground, {0.5, 0.0}});
    s.arena.push_back({rect(10.0, -9.0, 11.0, 10.0), BodyTag::Ground, {0.5, 0.0}});
    CutGoal goal;
    goal.medium = rect(-half, -2.0, half, 0.0);
    goal.drag_coefficient = 3.0;
    goal.depth = 2.0;
    goal.entry_y = 0.0;
    s.placement = {0.0, {0.0, 2.0}, 0.0, 0.0};
    s.design_dynamic = true;
    s.design_material = {0.5, 0.0};
    s.goal = goal;
    return s;
}

Json vec_json(Vec2 v) { return Json::array({v.x, v.y}); }

Vec2 vec_from(const Json& j, std::string_view key) {
    const Json& v = require(j, key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw Error(ErrorCode::ParseError, "field '" + std::string(key) + "' must be [x, y]");
    return {v[0].get<double>(), v[1].get<double>()};
}

Json polygon_json(const std::vector<Vec2>& pts) {
    Json out = Json::array();
    for (Vec2 p : pts) out.push_back(vec_json(p));
    return out;
}

std::vector<Vec2> polygon_from(const Json& j, std::string_view key) {
    const Json& arr = require(j, key);
    if (!arr.is_array()) throw Error(ErrorCode::ParseError, "field '" + std::string(key) + "' must be an array");
    std::vector<Vec2> pts;
    for (const Json& p : arr) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
            throw Error(ErrorCode::ParseError, "polygon points must be [x, y]");
        pts.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    return pts;
}

Material material_from(const Json& j) { return {require_number(j, "friction"), require_number(j, "restitution")}; }

physics::BodyTag tag_from(const Json& j) {
    return physics::body_tag_from_string(require_string(j, "tag"));
}

Json goal_json(const Goal& goal) {
    return std::visit(
        [](const auto& g) -> Json {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, CollectGoal>) {
                return {{"kind", "collect"}, {"kill_plane_y", g.kill_plane_y}};
            } else if constexpr (std::is_same_v<T, ProtectGoal>) {
                return {{"kind", "protect"}, {"zone", polygon_json(g.zone)}, {"projectile_count", g.projectile_count}};
            } else if constexpr (std::is_same_v<T, MoveGoal>) {
                return {{"kind", "move"},
                        {"start", vec_json(g.start)},
                        {"target", vec_json(g.target)},
                        {"incline_angle", g.incline_angle}};
            } else {
                return {{"kind", "cut"},
                        {"medium", polygon_json(g.medium)},
                        {"drag_coefficient", g.drag_coefficient},
                        {"depth", g.depth},
                        {"entry_y", g.entry_y}};
            }
        },
        goal);
}

Goal goal_from(const Json& j) {
    const std::string kind = require_string(j, "kind");
    if (kind == "collect") return CollectGoal{require_number(j, "kill_plane_y")};
    if (kind == "protect")
        return ProtectGoal{polygon_from(j, "zone"), static_cast<int>(require_integer(j, "projectile_count"))};
    if (kind == "move") return MoveGoal{vec_from(j, "start"), vec_from(j, "target"), require_number(j, "incline_angle")};
    if (kind == "cut")
        return CutGoal{polygon_from(j, "medium"), require_number(j, "drag_coefficient"), require_number(j, "depth"),
                       require_number(j, "entry_y")};
    throw Error(ErrorCode::ParseError, "unknown goal kind '" + kind + "'");
}

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

// Minimum y over the design's vertices whose x lies inside [x0, x1].
double lowest_vertex_in(const RigidBody& body, double x0, double x1) {
    double lowest = std::numeric_limits<double>::infinity();
    const Transform xf = body.transform();
    for (const Polygon& f : body.fixtures)
        for (Vec2 v : f.vertices()) {
            const Vec2 w = xf.apply(v);
            if (w.x >= x0 && w.x <= x1) lowest = std::min(lowest, w.y);
        }
    return lowest;
}

Frame capture(const World& world, std::size_t first_body) {
    Frame f;
    f.t = static_cast<double>(world.step_count()) * world.settings().dt;
    for (std::size_t i = first_body; i < world.body_count(); ++i) {
        const RigidBody& b = world.body(i);
        f.bodies.push_back({b.tag, b.position, b.angle});
    }
    return f;
}

}  // namespace

std::string_view to_string(ChallengeId id) {
    switch (id) {
    case ChallengeId::Collect: return "collect";
    case ChallengeId::Protect: return "protect";
    case ChallengeId::Move: return "move";
    case ChallengeId::Cut: return "cut";
    }
    return "collect";
}

ChallengeId challenge_id_from_string(std::string_view s) {
    for (ChallengeId id : kAllChallenges)
        if (to_string(id) == s) return id;
    throw Error(ErrorCode::UnknownChallenge, "unknown challenge '" + std::string(s) + "'");
}

void validate(const ChallengeSpec& spec) {
    if (spec.version != kSpecVersion) invalid("unsupported spec version '" + spec.version + "'");
    if (spec.episode_steps <= 0) invalid("episode_steps must be positive");
    for (const StaticPart& part : spec.arena) {
        make_polygon(part.polygon);
        if (!in_unit(part.material.friction) || !in_unit(part.material.restitution))
            invalid("arena material out of [0, 1]");
    }
    for (const SpawnBlueprint& b : spec.spawns) {
        if (b.step < 0 || b.step >= spec.episode_steps) invalid("spawn step outside the episode");
        if (!(b.radius > 0.0) || !(b.density > 0.0)) invalid("spawn radius and density must be positive");
        if (b.jitter.x < 0.0 || b.jitter.y < 0.0) invalid("jitter must be non-negative");
        if (!in_unit(b.material.friction) || !in_unit(b.material.restitution)) invalid("spawn material out of [0, 1]");
    }
    if (!(spec.design_density > 0.0)) invalid("design density must be positive");
    if (!in_unit(spec.design_material.friction) || !in_unit(spec.design_material.restitution))
        invalid("design material out of [0, 1]");
    if (std::abs(spec.placement.support_angle) >= std::numbers::pi / 2) invalid("support line must not be vertical");

    const auto expect = [&](ChallengeId id) {
        if (spec.id != id) invalid("goal kind does not match challenge id");
    };
    std::visit(
        [&](const auto& g) {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, CollectGoal>) {
                expect(ChallengeId::Collect);
            } else if constexpr (std::is_same_v<T, ProtectGoal>) {
                expect(ChallengeId::Protect);
                make_polygon(g.zone);
                const auto projectiles = std::count_if(spec.spawns.begin(), spec.spawns.end(), [](const SpawnBlueprint& b) {
                    return b.tag == BodyTag::Projectile;
                });
                if (g.projectile_count <= 0 || projectiles != g.projectile_count)
                    invalid("projectile_count must match the projectile spawns");
            } else if constexpr (std::is_same_v<T, MoveGoal>) {
                expect(ChallengeId::Move);
                if (distance(g.start, g.target) <= 0.0) invalid("move target must differ from start");
            } else {
                expect(ChallengeId::Cut);
                make_polygon(g.medium);
                if (!(g.depth > 0.0)) invalid("medium depth must be positive");
                if (g.drag_coefficient < 0.0) invalid("drag coefficient must be non-negative");
            }
        },
        spec.goal);
}

std::map<ChallengeId, ChallengeSpec> default_specs() {
    return {{ChallengeId::Collect, collect_spec()},
            {ChallengeId::Protect, protect_spec()},
            {ChallengeId::Move, move_spec()},
            {ChallengeId::Cut, cut_spec()}};
}

const ChallengeSpec& default_spec(ChallengeId id) {
    static const std::map<ChallengeId, ChallengeSpec> specs = default_specs();
    return specs.at(id);
}

Json spec_to_json(const ChallengeSpec& spec) {
    Json arena = Json::array();
    for (const StaticPart& p : spec.arena)
        arena.push_back({{"polygon", polygon_json(p.polygon)},
                         {"tag", physics::to_string(p.tag)},
                         {"friction", p.material.friction},
                         {"restitution", p.material.restitution}});
    Json spawns = Json::array();
    for (const SpawnBlueprint& b : spec.spawns)
        spawns.push_back({{"step", b.step},
                          {"tag", physics::to_string(b.tag)},
                          {"position", vec_json(b.position)},
                          {"velocity", vec_json(b.velocity)},
                          {"jitter", vec_json(b.jitter)},
                          {"radius", b.radius},
                          {"density", b.density},
                          {"friction", b.material.friction},
                          {"restitution", b.material.restitution}});
    return {{"id", to_string(spec.id)},
            {"version", spec.version},
            {"episode_steps", spec.episode_steps},
            {"arena", arena},
            {"spawns", spawns},
            {"placement",
             {{"center_x", spec.placement.center_x},
              {"support_point", vec_json(spec.placement.support_point)},
              {"support_angle", spec.placement.support_angle},
              {"clearance", spec.placement.clearance}}},
            {"design",
             {{"dynamic", spec.design_dynamic},
              {"density", spec.design_density},
              {"friction", spec.design_material.friction},
              {"restitution", spec.design_material.restitution}}},
            {"goal", goal_json(spec.goal)}};
}

ChallengeSpec spec_from_json(const Json& j) {
    if (!j.is_object()) throw Error(ErrorCode::ParseError, "challenge spec must be an object");
    ChallengeSpec s;
    s.id = challenge_id_from_string(require_string(j, "id"));
    s.version = require_string(j, "version");
    s.episode_steps = static_cast<int>(require_integer(j, "episode_steps"));
    for (const Json& p : require(j, "arena"))
        s.arena.push_back({polygon_from(p, "polygon"), tag_from(p), material_from(p)});
    for (const Json& b : require(j, "spawns")) {
        SpawnBlueprint bp;
        bp.step = static_cast<int>(require_integer(b, "step"));
        bp.tag = tag_from(b);
        bp.position = vec_from(b, "position");
        bp.velocity = vec_from(b, "velocity");
        bp.jitter = vec_from(b, "jitter");
        bp.radius = require_number(b, "radius");
        bp.density = require_number(b, "density");
        bp.material = material_from(b);
        s.spawns.push_back(bp);
    }
    const Json& pl = require(j, "placement");
    s.placement = {require_number(pl, "center_x"), vec_from(pl, "support_point"), require_number(pl, "support_angle"),
                   require_number(pl, "clearance")};
    const Json& d = require(j, "design");
    const Json& dynamic = require(d, "dynamic");
    if (!dynamic.is_boolean()) throw Error(ErrorCode::ParseError, "field 'dynamic' must be a boolean");
    s.design_dynamic = dynamic.get<bool>();
    s.design_density = require_number(d, "density");
    s.design_material = material_from(d);
    s.goal = goal_from(require(j, "goal"));
    validate(s);
    return s;
}

Json frame_to_json(const Frame& frame) {
    Json bodies = Json::array();
    for (const BodyFrame& b : frame.bodies)
        bodies.push_back({{"tag", physics::to_string(b.tag)}, {"pos", vec_json(b.pos)}, {"angle", b.angle}});
    return {{"t", frame.t}, {"bodies", bodies}};
}

Frame frame_from_json(const Json& j) {
    Frame f;
    f.t = require_number(j, "t");
    for (const Json& b : require(j, "bodies")) f.bodies.push_back({tag_from(b), vec_from(b, "pos"), require_number(b, "angle")});
    return f;
}

std::string frames_to_jsonl(std::span<const Frame> frames) {
    std::string out;
    for (const Frame& f : frames) {
        out += frame_to_json(f).dump();
        out += '\n';
    }
    return out;
}

std::vector<Frame> frames_from_jsonl(std::string_view text) {
    std::vector<Frame> frames;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) frames.push_back(frame_from_json(parse_json(line)));
    return frames;
}

Json result_to_json(const EpisodeResult& result) {
    Json metrics = Json::object();
    for (const auto& [k, v] : result.metrics) metrics[k] = v;
    Json j{{"score", result.score}, {"metrics", metrics}, {"seed", result.seed}, {"design_hash", result.design_hash}};
    if (result.frames_ref) j["frames_ref"] = *result.frames_ref;
    return j;
}

EpisodeResult result_from_json(const Json& j) {
    EpisodeResult r;
    r.score = require_number(j, "score");
    const Json& metrics = require(j, "metrics");
    if (!metrics.is_object()) throw Error(ErrorCode::ParseError, "field 'metrics' must be an object");
    for (const auto& [k, v] : metrics.items()) {
        if (!v.is_number()) throw Error(ErrorCode::ParseError, "metric '" + k + "' must be a number");
        r.metrics[k] = v.get<double>();
    }
    const Json& seed = require(j, "seed");
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0))
        throw Error(ErrorCode::ParseError, "field 'seed' must be a non-negative integer");
    r.seed = seed.get<std::uint64_t>();
    r.design_hash = require_string(j, "design_hash");
    if (j.contains("frames_ref") && !j["frames_ref"].is_null()) r.frames_ref = require_string(j, "frames_ref");
    return r;
}

shape::BrickChain place_design(const shape::BrickChain& design, const Placement& placement) {
    const auto rects = shape::chain_vertices(design);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& r : rects)
        for (Vec2 v : r) {
            lo = std::min(lo, v.x);
            hi = std::max(hi, v.x);
        }
    const double dx = placement.center_x - 0.5 * (lo + hi);
    double min_gap = std::numeric_limits<double>::infinity();
    for (const auto& r : rects)
        for (Vec2 v : r) min_gap = std::min(min_gap, v.y - support_height(placement, v.x + dx));
    const Vec2 offset{dx, placement.clearance - min_gap};
    return shape::BrickChain(design.anchor() + offset, {design.bricks().begin(), design.bricks().end()},
                             design.brick_length(), design.brick_thickness());
}

World build_env(const ChallengeSpec& spec, const shape::BrickChain& design) {
    validate(spec);
    World world;
    for (const StaticPart& part : spec.arena)
        world.add_body(RigidBody::make_static({make_polygon(part.polygon)}, part.material, part.tag));
    if (const auto* cut = std::get_if<CutGoal>(&spec.goal))
        world.add_drag_field({make_polygon(cut->medium), cut->drag_coefficient, BodyTag::Design});

    RigidBody body = physics::compound_from_chain(place_design(design, spec.placement), spec.design_density,
                                                  spec.design_material, BodyTag::Design);
    if (!spec.design_dynamic) {
        body.mass = body.inverse_mass = body.inertia = body.inverse_inertia = 0.0;
    }
    world.add_body(std::move(body));
    return world;
}

World build_env(const ChallengeSpec& spec, const shape::Design& design) {
    if (!design) throw Error(ErrorCode::EmptyChain, "cannot evaluate an empty design");
    return build_env(spec, *design);
}

CollectCount count_collected(const World& world, std::size_t design_body, std::span<const std::size_t> balls,
                             double kill_plane_y) {
    CollectCount count;
    count.spawned = static_cast<int>(balls.size());
    // Nodes: 0 is the design, 1..n the balls.
    std::vector<std::size_t> nodes{design_body};
    nodes.insert(nodes.end(), balls.begin(), balls.end());
    std::vector<std::vector<physics::Polygon>> shapes;
    std::vector<physics::Aabb> boxes;
    for (std::size_t idx : nodes) {
        shapes.push_back(physics::world_fixtures(world.body(idx)));
        physics::Aabb box = shapes.back().front().bounds();
        for (const Polygon& p : shapes.back()) {
            const physics::Aabb b = p.bounds();
            box = {{std::min(box.lo.x, b.lo.x), std::min(box.lo.y, b.lo.y)},
                   {std::max(box.hi.x, b.hi.x), std::max(box.hi.y, b.hi.y)}};
        }
        boxes.push_back(box.expanded(kTouchTolerance));
    }
    const auto touching = [&](std::size_t a, std::size_t b) {
        if (!boxes[a].overlaps(boxes[b])) return false;
        for (const Polygon& pa : shapes[a])
            for (const Polygon& pb : shapes[b])
                if (physics::collide_polygons(pa, pb, kTouchTolerance)) return true;
        return false;
    };
    std::vector<bool> reached(nodes.size(), false);
    std::vector<std::size_t> frontier{0};
    reached[0] = true;
    while (!frontier.empty()) {
        const std::size_t cur = frontier.back();
        frontier.pop_back();
        for (std::size_t other = 1; other < nodes.size(); ++other) {
            if (reached[other] || !touching(cur, other)) continue;
            reached[other] = true;
            frontier.push_back(other);
        }
    }
    for (std::size_t i = 1; i < nodes.size(); ++i)
        if (reached[i] && world.body(nodes[i]).position.y > kill_plane_y) ++count.collected;
    return count;
}

double score_collect(const CollectCount& count) {
    if (count.spawned <= 0) return 0.0;
    return std::clamp(static_cast<double>(count.collected) / count.spawned, 0.0, 1.0);
}

double score_protect(int hits, int spawned) {
    if (spawned <= 0) return 1.0;
    return std::clamp(1.0 - static_cast<double>(hits) / spawned, 0.0, 1.0);
}

MoveOutcome score_move(std::span<const Vec2> trajectory, Vec2 target) {
    if (trajectory.empty()) throw Error(ErrorCode::DegenerateSpec, "empty trajectory");
    MoveOutcome out;
    out.d0 = distance(trajectory.front(), target);
    if (!(out.d0 > 0.0)) throw Error(ErrorCode::DegenerateSpec, "start coincides with the target");
    out.d_min = out.d0;
    for (Vec2 p : trajectory) out.d_min = std::min(out.d_min, distance(p, target));
    out.score = std::clamp((out.d0 - out.d_min) / out.d0, 0.0, 1.0);
    return out;
}

double score_cut(double depth_reached, double depth) {
    if (!(depth > 0.0)) throw Error(ErrorCode::DegenerateSpec, "medium depth must be positive");
    return std::clamp(depth_reached / depth, 0.0, 1.0);
}

std::vector<Vec2> design_trajectory(std::span<const Frame> frames) {
    std::vector<Vec2> out;
    out.reserve(frames.size());
    for (const Frame& f : frames)
        for (const BodyFrame& b : f.bodies)
            if (b.tag == BodyTag::Design) {
                out.push_back(b.pos);
                break;
            }
    return out;
}

EpisodeResult run_episode(const ChallengeSpec& spec, const shape::BrickChain& design, std::uint64_t seed,
                          const RunOptions& options) {
    if (options.frame_interval <= 0) throw Error(ErrorCode::InvalidSpec, "frame_interval must be positive");
    World world = build_env(spec, design);
    const std::size_t design_body = world.body_count() - 1;

    // Jitter is drawn up front, two values per spawn, in schedule order.
    Rng rng(seed);
    std::vector<Vec2> spawn_at;
    for (const SpawnBlueprint& b : spec.spawns) {
        const double jx = rng.uniform(-1.0, 1.0);
        const double jy = rng.uniform(-1.0, 1.0);
        spawn_at.push_back(b.position + Vec2{jx * b.jitter.x, jy * b.jitter.y});
    }

    EpisodeResult result;
    result.seed = seed;
    result.design_hash = shape::design_hash(design);

    std::vector<std::size_t> spawned;
    std::vector<bool> hit;
    std::optional<Polygon> zone;
    if (const auto* g = std::get_if<ProtectGoal>(&spec.goal)) zone = make_polygon(g->zone);
    const auto* cut = std::get_if<CutGoal>(&spec.goal);
    double cut_x0 = 0.0, cut_x1 = 0.0, depth_reached = 0.0;
    if (cut) {
        const physics::Aabb box = make_polygon(cut->medium).bounds();
        cut_x0 = box.lo.x;
        cut_x1 = box.hi.x;
    }
    const auto track_depth = [&] {
        const double lowest = lowest_vertex_in(world.body(design_body), cut_x0, cut_x1);
        if (std::isfinite(lowest)) depth_reached = std::max(depth_reached, cut->entry_y - lowest);
    };
    std::vector<Vec2> trajectory{world.body(design_body).position};
    if (cut) track_depth();
    if (options.capture_frames) result.frames.push_back(capture(world, design_body));

    for (int s = 0; s < spec.episode_steps; ++s) {
        for (std::size_t i = 0; i < spec.spawns.size(); ++i) {
            const SpawnBlueprint& b = spec.spawns[i];
            if (b.step != s) continue;
            RigidBody body = RigidBody::make_dynamic({Polygon::regular(kRoundSides, b.radius, spawn_at[i])}, b.density,
                                                     b.material, b.tag);
            body.linear_velocity = b.velocity;
            spawned.push_back(world.add_body(std::move(body)));
            hit.push_back(false);
        }
        world.step();
        if (zone) {
            for (std::size_t idx : physics::query_region(world, *zone)) {
                const auto it = std::find(spawned.begin(), spawned.end(), idx);
                if (it != spawned.end() && world.body(idx).tag == BodyTag::Projectile)
                    hit[static_cast<std::size_t>(it - spawned.begin())] = true;
            }
        }
        trajectory.push_back(world.body(design_body).position);
        if (cut) track_depth();
        if (options.capture_frames &&
            ((s + 1) % options.frame_interval == 0 || s + 1 == spec.episode_steps))
            result.frames.push_back(capture(world, design_body));
    }

    std::visit(
        [&](const auto& g) {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, CollectGoal>) {
                const CollectCount c = count_collected(world, design_body, spawned, g.kill_plane_y);
                result.score = score_collect(c);
                result.metrics["balls_spawned"] = c.spawned;
                result.metrics["balls_collected"] = c.collected;
            } else if constexpr (std::is_same_v<T, ProtectGoal>) {
                int projectiles = 0, hits = 0;
                for (std::size_t i = 0; i < spawned.size(); ++i) {
                    if (world.body(spawned[i]).tag != BodyTag::Projectile) continue;
                    ++projectiles;
                    if (hit[i]) ++hits;
                }
                result.score = score_protect(hits, projectiles);
                result.metrics["projectiles_spawned"] = projectiles;
                result.metrics["hits"] = hits;
                result.metrics["hits_blocked"] = projectiles - hits;
            } else if constexpr (std::is_same_v<T, MoveGoal>) {
                const MoveOutcome m = score_move(trajectory, g.target + (trajectory.front() - g.start));
                result.score = m.score;
                result.metrics["d0"] = m.d0;
                result.metrics["d_min"] = m.d_min;
                result.metrics["distance_closed"] = m.d0 - m.d_min;
            } else {
                result.score = score_cut(depth_reached, g.depth);
                result.metrics["depth_reached"] = depth_reached;
                result.metrics["medium_depth"] = g.depth;
            }
        },
        spec.goal);
    return result;
}

EpisodeResult run_episode(const ChallengeSpec& spec, const shape::Design& design, std::uint64_t seed,
                          const RunOptions& options) {
    if (!design) throw Error(ErrorCode::EmptyChain, "cannot evaluate an empty design");
    return run_episode(spec, *design, seed, options);
}

}  // namespace coevo::challenges
