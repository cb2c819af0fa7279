#pragma once

// The four design challenges: arena builders, episode runner and scorers.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "coevo/json_util.hpp"
#include "coevo/physics/world.hpp"
#include "coevo/shape.hpp"

namespace coevo::challenges {

using physics::BodyTag;
using physics::Material;

enum class ChallengeId { Collect, Protect, Move, Cut };

inline constexpr std::array<ChallengeId, 4> kAllChallenges{ChallengeId::Collect, ChallengeId::Protect,
                                                           ChallengeId::Move, ChallengeId::Cut};
inline constexpr std::string_view kSpecVersion = "v1";
// Seed used when a caller does not supply one.
inline constexpr std::uint64_t kDefaultSeed = 0;

std::string_view to_string(ChallengeId id);
// Throws UnknownChallenge.
ChallengeId challenge_id_from_string(std::string_view s);

// A static arena body with one convex fixture in world coordinates.
struct StaticPart {
    std::vector<Vec2> polygon;
    BodyTag tag = BodyTag::Ground;
    Material material;
};

// A round body (regular 16-gon) injected before the given step.
struct SpawnBlueprint {
    int step = 0;
    BodyTag tag = BodyTag::Ball;
    Vec2 position;
    Vec2 velocity;
    // Half-widths of the seeded uniform offset added to `position`.
    Vec2 jitter;
    double radius = 0.1;
    double density = 1.0;
    Material material;
};

// Where the (unrotated) design goes: its bounding-box center is moved to
// x = center_x and it is lifted so its lowest vertex sits `clearance` above
// the support line through `support_point` with slope angle `support_angle`.
struct Placement {
    double center_x = 0.0;
    Vec2 support_point;
    double support_angle = 0.0;
    double clearance = 0.0;
};

struct CollectGoal {
    double kill_plane_y = -1.0;
};

struct ProtectGoal {
    std::vector<Vec2> zone;
    int projectile_count = 0;
};

// Distances are measured from the design's center of mass to `target`
// shifted by (initial center of mass - start), so every design starts
// |target - start| away.
struct MoveGoal {
    Vec2 start;
    Vec2 target;
    double incline_angle = 0.0;
};

// Depth is measured downward from `entry_y`.
struct CutGoal {
    std::vector<Vec2> medium;
    double drag_coefficient = 0.0;
    double depth = 0.0;
    double entry_y = 0.0;
};

using Goal = std::variant<CollectGoal, ProtectGoal, MoveGoal, CutGoal>;

struct ChallengeSpec {
    ChallengeId id = ChallengeId::Collect;
    std::string version{kSpecVersion};
    int episode_steps = 0;
    std::vector<StaticPart> arena;
    std::vector<SpawnBlueprint> spawns;
    Placement placement;
    bool design_dynamic = false;
    double design_density = 1.0;
    Material design_material;
    Goal goal;
};

// Throws InvalidSpec when an invariant does not hold.
void validate(const ChallengeSpec& spec);

std::map<ChallengeId, ChallengeSpec> default_specs();
const ChallengeSpec& default_spec(ChallengeId id);

Json spec_to_json(const ChallengeSpec& spec);
ChallengeSpec spec_from_json(const Json& j);

// One sampled world state. `pos` is a body's center of mass.
struct BodyFrame {
    BodyTag tag = BodyTag::Design;
    Vec2 pos;
    double angle = 0.0;
    bool operator==(const BodyFrame&) const = default;
};

struct Frame {
    double t = 0.0;
    std::vector<BodyFrame> bodies;
    bool operator==(const Frame&) const = default;
};

Json frame_to_json(const Frame& frame);
Frame frame_from_json(const Json& j);
std::string frames_to_jsonl(std::span<const Frame> frames);
std::vector<Frame> frames_from_jsonl(std::string_view text);

struct EpisodeResult {
    double score = 0.0;
    std::map<std::string, double> metrics;
    std::uint64_t seed = 0;
    std::string design_hash;
    std::optional<std::string> frames_ref;
    // Not part of the wire format; filled when frames are captured.
    std::vector<Frame> frames;
};

Json result_to_json(const EpisodeResult& result);
EpisodeResult result_from_json(const Json& j);

struct RunOptions {
    bool capture_frames = false;
    int frame_interval = 2;
};

// The arena (in spec order), then the design. Spawned bodies are added by
// run_episode. Throws EmptyChain, InvalidSpec.
physics::World build_env(const ChallengeSpec& spec, const shape::Design& design);
physics::World build_env(const ChallengeSpec& spec, const shape::BrickChain& design);

// The design translated according to `placement`.
shape::BrickChain place_design(const shape::BrickChain& design, const Placement& placement);

EpisodeResult run_episode(const ChallengeSpec& spec, const shape::Design& design, std::uint64_t seed,
                          const RunOptions& options = {});
EpisodeResult run_episode(const ChallengeSpec& spec, const shape::BrickChain& design, std::uint64_t seed,
                          const RunOptions& options = {});

// Scorers. Each returns a value in [0, 1].

// Fraction of spawned balls above the kill plane and connected to the design
// through touching bodies.
struct CollectCount {
    int collected = 0;
    int spawned = 0;
};
CollectCount count_collected(const physics::World& world, std::size_t design_body, std::span<const std::size_t> balls,
                             double kill_plane_y);
double score_collect(const CollectCount& count);

// One minus the fraction of spawned projectiles that ever touched the zone.
double score_protect(int hits, int spawned);

// `trajectory` holds the design's center of mass from the first state on.
// Throws DegenerateSpec if the start coincides with the target.
struct MoveOutcome {
    double d0 = 0.0;
    double d_min = 0.0;
    double score = 0.0;
};
MoveOutcome score_move(std::span<const Vec2> trajectory, Vec2 target);

// Throws DegenerateSpec if depth <= 0.
double score_cut(double depth_reached, double depth);

// Design center-of-mass track extracted from frames (design body per frame).
std::vector<Vec2> design_trajectory(std::span<const Frame> frames);

// Bodies within this distance count as touching for collection.
inline constexpr double kTouchTolerance = 0.01;

}  // namespace coevo::challenges
