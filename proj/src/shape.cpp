#include "coevo/shape.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include "coevo/error.hpp"

namespace coevo::shape {

namespace {

constexpr double kQuantizationTolerance = 1e-6;

const std::array<Vec2, kStepsPerTurn>& direction_table() {
    static const auto table = [] {
        std::array<Vec2, kStepsPerTurn> t{};
        for (int i = 0; i < kStepsPerTurn; ++i) {
            const double a = (i - kStepsPerTurn / 2) * kAngleStep;
            t[static_cast<std::size_t>(i)] = {std::cos(a), std::sin(a)};
        }
        return t;
    }();
    return table;
}

[[noreturn]] void fail(ErrorCode code, const std::string& msg) { throw Error(code, msg); }

}  // namespace

Angle Angle::from_radians(double radians) {
    if (!std::isfinite(radians)) fail(ErrorCode::UnquantizedAngle, "angle is not finite");
    const double steps = radians / kAngleStep;
    const double nearest = std::round(steps);
    if (std::abs(steps - nearest) * kAngleStep > kQuantizationTolerance || std::abs(nearest) > 1e6)
        fail(ErrorCode::UnquantizedAngle,
             "angle " + std::to_string(radians) + " is not a multiple of pi/12");
    return from_steps(static_cast<int>(nearest));
}

Vec2 direction(Angle absolute) {
    return direction_table()[static_cast<std::size_t>(absolute.steps() + kStepsPerTurn / 2)];
}

BrickChain::BrickChain(Vec2 anchor, std::vector<Brick> bricks, double brick_length,
                       double brick_thickness)
    : anchor_(anchor), bricks_(std::move(bricks)), length_(brick_length),
      thickness_(brick_thickness) {
    if (bricks_.empty()) fail(ErrorCode::EmptyChain, "a brick chain needs at least one brick");
    if (bricks_.size() > kMaxBricks)
        fail(ErrorCode::ChainFull, "a brick chain holds at most " + std::to_string(kMaxBricks) + " bricks");
    if (!(length_ > 0.0) || !(thickness_ > 0.0) || !std::isfinite(length_) || !std::isfinite(thickness_))
        fail(ErrorCode::BadBounds, "brick dimensions must be positive");
    if (!std::isfinite(anchor_.x) || !std::isfinite(anchor_.y))
        fail(ErrorCode::BadBounds, "anchor must be finite");
}

BrickChain BrickChain::from_steps(std::span<const int> steps, Vec2 anchor) {
    std::vector<Brick> bricks;
    bricks.reserve(steps.size());
    for (int s : steps) bricks.push_back({Angle::from_steps(s)});
    return BrickChain(anchor, std::move(bricks));
}

Angle BrickChain::absolute_angle(std::size_t i) const {
    Angle a;
    for (std::size_t k = 0; k <= i && k < bricks_.size(); ++k) a = a + bricks_[k].rel_angle;
    return a;
}

Design apply_action(const Design& chain, const Action& action) {
    return std::visit(
        [&](const auto& act) -> Design {
            using T = std::decay_t<decltype(act)>;
            if constexpr (std::is_same_v<T, AddBrick>) {
                if (!chain) return BrickChain({}, {Brick{act.rel_angle}});
                if (chain->size() >= kMaxBricks)
                    fail(ErrorCode::ChainFull, "chain already has the maximum number of bricks");
                std::vector<Brick> bricks(chain->bricks().begin(), chain->bricks().end());
                Vec2 anchor = chain->anchor();
                if (act.end == ChainEnd::Tail) {
                    bricks.push_back({act.rel_angle});
                } else {
                    const Angle head = bricks.front().rel_angle - act.rel_angle;
                    anchor -= direction(head) * chain->brick_length();
                    bricks.front().rel_angle = act.rel_angle;
                    bricks.insert(bricks.begin(), Brick{head});
                }
                return BrickChain(anchor, std::move(bricks), chain->brick_length(),
                                  chain->brick_thickness());
            } else if constexpr (std::is_same_v<T, RemoveBrick>) {
                if (!chain) fail(ErrorCode::EmptyChain, "cannot remove a brick from an empty design");
                if (chain->size() == 1) return std::nullopt;
                std::vector<Brick> bricks(chain->bricks().begin(), chain->bricks().end());
                Vec2 anchor = chain->anchor();
                if (act.end == ChainEnd::Tail) {
                    bricks.pop_back();
                } else {
                    const Angle head = bricks[0].rel_angle;
                    anchor += direction(head) * chain->brick_length();
                    bricks[1].rel_angle = head + bricks[1].rel_angle;
                    bricks.erase(bricks.begin());
                }
                return BrickChain(anchor, std::move(bricks), chain->brick_length(),
                                  chain->brick_thickness());
            } else {
                if (!chain) fail(ErrorCode::EmptyChain, "cannot rotate a brick of an empty design");
                if (act.index >= chain->size())
                    fail(ErrorCode::IndexOutOfRange,
                         "brick index " + std::to_string(act.index) + " out of range for chain of " +
                             std::to_string(chain->size()));
                std::vector<Brick> bricks(chain->bricks().begin(), chain->bricks().end());
                bricks[act.index].rel_angle = act.new_rel_angle;
                return BrickChain(chain->anchor(), std::move(bricks), chain->brick_length(),
                                  chain->brick_thickness());
            }
        },
        action);
}

std::vector<Vec2> chain_joints(const BrickChain& chain) {
    std::vector<Vec2> joints;
    joints.reserve(chain.size() + 1);
    Vec2 p = chain.anchor();
    joints.push_back(p);
    Angle heading;
    for (const Brick& b : chain.bricks()) {
        heading = heading + b.rel_angle;
        p += direction(heading) * chain.brick_length();
        joints.push_back(p);
    }
    return joints;
}

std::vector<Rectangle> chain_vertices(const BrickChain& chain) {
    const std::vector<Vec2> joints = chain_joints(chain);
    const double half = 0.5 * chain.brick_thickness();
    std::vector<Rectangle> rects;
    rects.reserve(chain.size());
    Angle heading;
    for (std::size_t i = 0; i < chain.size(); ++i) {
        heading = heading + chain.bricks()[i].rel_angle;
        const Vec2 offset = left_normal(direction(heading)) * half;
        const Vec2 a = joints[i];
        const Vec2 b = joints[i + 1];
        rects.push_back({a - offset, b - offset, b + offset, a + offset});
    }
    return rects;
}

std::uint64_t ActionLog::append(ActorId actor, Action action) {
    const auto seq = static_cast<std::uint64_t>(entries.size());
    entries.push_back({seq, std::move(actor), std::move(action)});
    return seq;
}

Design replay(const ActionLog& log) {
    Design chain;
    for (std::size_t i = 0; i < log.entries.size(); ++i) {
        const LogEntry& e = log.entries[i];
        if (e.seq != i)
            fail(ErrorCode::InvalidLog, "log entry " + std::to_string(i) + " has seq " + std::to_string(e.seq));
        try {
            chain = apply_action(chain, e.action);
        } catch (const Error& err) {
            fail(ErrorCode::InvalidLog,
                 "log entry " + std::to_string(e.seq) + " cannot be applied: " + err.what());
        }
    }
    return chain;
}

double genotype_distance(const BrickChain& a, const BrickChain& b) {
    const std::size_t overlap = std::min(a.size(), b.size());
    const std::size_t extra = std::max(a.size(), b.size()) - overlap;
    int steps = 0;
    for (std::size_t i = 0; i < overlap; ++i) {
        // wrap into [-12, 12]: the difference lands in [-12, 11] after from_steps
        steps += std::abs((a.bricks()[i].rel_angle - b.bricks()[i].rel_angle).steps());
    }
    return static_cast<double>(extra) * kLengthPenalty + steps * kAngleStep;
}

double genotype_distance(const Design& a, const Design& b) {
    if (!a || !b) fail(ErrorCode::EmptyChain, "genotype distance needs two non-empty designs");
    return genotype_distance(*a, *b);
}

Angle random_angle(Rng& rng) {
    return Angle::from_steps(rng.uniform_int(-kStepsPerTurn / 2, kStepsPerTurn / 2 - 1));
}

BrickChain random_chain(Rng& rng, std::size_t min_len, std::size_t max_len) {
    if (min_len < 1 || min_len > max_len || max_len > kMaxBricks)
        fail(ErrorCode::BadBounds, "random_chain needs 1 <= min_len <= max_len <= " +
                                       std::to_string(kMaxBricks));
    const auto len = static_cast<std::size_t>(
        rng.uniform_int(static_cast<int>(min_len), static_cast<int>(max_len)));
    std::vector<Brick> bricks;
    bricks.reserve(len);
    for (std::size_t i = 0; i < len; ++i) bricks.push_back({random_angle(rng)});
    return BrickChain({}, std::move(bricks));
}

}  // namespace coevo::shape
