#pragma once

// Brick-chain designs and the action vocabulary shared by human and agent
// designers.

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "coevo/geometry.hpp"
#include "coevo/rng.hpp"

namespace coevo::shape {

inline constexpr int kStepsPerTurn = 24;
inline constexpr double kAngleStep = std::numbers::pi / 12.0;
inline constexpr std::size_t kMaxBricks = 32;
inline constexpr double kDefaultBrickLength = 1.0;
inline constexpr double kDefaultBrickThickness = 0.2;
// Cost of one unmatched brick in genotype_distance.
inline constexpr double kLengthPenalty = std::numbers::pi;

/// An angle restricted to whole multiples of kAngleStep in [-pi, pi).
class Angle {
public:
    constexpr Angle() = default;

    static constexpr Angle from_steps(int steps) { return Angle(wrap(steps)); }
    // Throws UnquantizedAngle unless `radians` is within 1e-6 of a multiple
    // of kAngleStep. Multiples outside [-pi, pi) are wrapped.
    static Angle from_radians(double radians);

    constexpr int steps() const { return steps_; }
    double radians() const { return steps_ * kAngleStep; }

    constexpr Angle operator+(Angle o) const { return from_steps(steps_ + o.steps_); }
    constexpr Angle operator-(Angle o) const { return from_steps(steps_ - o.steps_); }
    constexpr auto operator<=>(const Angle&) const = default;

private:
    constexpr explicit Angle(int steps) : steps_(steps) {}

    static constexpr int wrap(int steps) {
        int s = (steps + kStepsPerTurn / 2) % kStepsPerTurn;
        if (s < 0) s += kStepsPerTurn;
        return s - kStepsPerTurn / 2;
    }

    int steps_ = 0;
};

// Unit vector for an absolute quantized direction (table lookup).
Vec2 direction(Angle absolute);

struct Brick {
    Angle rel_angle;
    bool operator==(const Brick&) const = default;
};

/// Non-empty continuous chain of equal rectangular bricks. The first brick's
/// angle is absolute (from +x); later ones are relative to their predecessor.
class BrickChain {
public:
    BrickChain(Vec2 anchor, std::vector<Brick> bricks,
               double brick_length = kDefaultBrickLength,
               double brick_thickness = kDefaultBrickThickness);

    static BrickChain from_steps(std::span<const int> steps, Vec2 anchor = {});

    std::span<const Brick> bricks() const { return bricks_; }
    std::size_t size() const { return bricks_.size(); }
    Vec2 anchor() const { return anchor_; }
    double brick_length() const { return length_; }
    double brick_thickness() const { return thickness_; }

    // Absolute direction of brick i (cumulative sum of relative angles).
    Angle absolute_angle(std::size_t i) const;

    bool operator==(const BrickChain&) const = default;

private:
    Vec2 anchor_;
    std::vector<Brick> bricks_;
    double length_;
    double thickness_;
};

// An empty design is representable (action logs start from it) but is never
// evaluable.
using Design = std::optional<BrickChain>;

enum class ChainEnd { Head, Tail };

struct AddBrick {
    ChainEnd end = ChainEnd::Tail;
    Angle rel_angle;
    bool operator==(const AddBrick&) const = default;
};

struct RemoveBrick {
    ChainEnd end = ChainEnd::Tail;
    bool operator==(const RemoveBrick&) const = default;
};

struct RotateBrick {
    std::size_t index = 0;
    Angle new_rel_angle;
    bool operator==(const RotateBrick&) const = default;
};

using Action = std::variant<AddBrick, RemoveBrick, RotateBrick>;

enum class ActorKind { Human, Agent };

struct ActorId {
    ActorKind kind = ActorKind::Human;
    std::string id;
    auto operator<=>(const ActorId&) const = default;
};

struct LogEntry {
    std::uint64_t seq = 0;
    ActorId actor;
    Action action;
    bool operator==(const LogEntry&) const = default;
};

struct ActionLog {
    std::string session_id;
    std::string challenge_id;
    std::vector<LogEntry> entries;

    // Appends with the next sequence number; does not validate.
    std::uint64_t append(ActorId actor, Action action);

    bool operator==(const ActionLog&) const = default;
};

/// Applies one edit.
///
/// AddBrick at Head prepends a brick whose end meets the old anchor; the old
/// first brick then hangs off it at `rel_angle`, and the chain is re-anchored
/// at the new brick's start. RemoveBrick at Head makes the second brick the
/// new first brick, keeping its absolute direction and position.
Design apply_action(const Design& chain, const Action& action);

// Start/end joints, size()+1 points.
std::vector<Vec2> chain_joints(const BrickChain& chain);

using Rectangle = std::array<Vec2, 4>;

// One counterclockwise rectangle per brick.
std::vector<Rectangle> chain_vertices(const BrickChain& chain);

Design replay(const ActionLog& log);

double genotype_distance(const BrickChain& a, const BrickChain& b);
double genotype_distance(const Design& a, const Design& b);

BrickChain random_chain(Rng& rng, std::size_t min_len, std::size_t max_len);

Angle random_angle(Rng& rng);

}  // namespace coevo::shape
