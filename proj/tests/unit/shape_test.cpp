#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "coevo/error.hpp"
#include "coevo/shape.hpp"
#include "coevo/shape_json.hpp"

using namespace coevo;
using namespace coevo::shape;

namespace {

constexpr double kPi = std::numbers::pi;

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected coevo::Error";
    return ErrorCode::IoError;
}

BrickChain chain_of(std::initializer_list<int> steps) {
    std::vector<int> v(steps);
    return BrickChain::from_steps(v);
}

// Random action that is legal for `current` (hand-rolled generator).
Action random_legal_action(Rng& rng, const Design& current) {
    const std::size_t n = current ? current->size() : 0;
    for (;;) {
        switch (rng.uniform_int(0, 2)) {
        case 0:
            if (n < kMaxBricks)
                return AddBrick{rng.uniform_int(0, 1) ? ChainEnd::Head : ChainEnd::Tail, random_angle(rng)};
            break;
        case 1:
            if (n >= 1) return RemoveBrick{rng.uniform_int(0, 1) ? ChainEnd::Head : ChainEnd::Tail};
            break;
        default:
            if (n >= 1)
                return RotateBrick{static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(n) - 1)),
                                   random_angle(rng)};
            break;
        }
    }
}

}  // namespace

TEST(Angle, QuantizesAndWraps) {
    EXPECT_EQ(Angle::from_radians(kPi / 2).steps(), 6);
    EXPECT_EQ(Angle::from_radians(-kPi).steps(), -12);
    EXPECT_EQ(Angle::from_radians(kPi).steps(), -12);
    EXPECT_EQ(Angle::from_radians(2 * kPi + kPi / 12).steps(), 1);
    EXPECT_EQ(code_of([] { Angle::from_radians(0.1); }), ErrorCode::UnquantizedAngle);
    EXPECT_EQ(code_of([] { Angle::from_radians(std::nan("")); }), ErrorCode::UnquantizedAngle);
}

TEST(ApplyAction, AddToEmptyMakesOneBrickAlongX) {
    const Design d = apply_action(std::nullopt, AddBrick{ChainEnd::Tail, Angle{}});
    ASSERT_TRUE(d);
    EXPECT_EQ(d->size(), 1u);
    const auto joints = chain_joints(*d);
    EXPECT_EQ(joints[1], (Vec2{1.0, 0.0}));
}

TEST(ApplyAction, RemoveLastBrickYieldsEmpty) {
    const Design d = apply_action(chain_of({0}), RemoveBrick{ChainEnd::Tail});
    EXPECT_FALSE(d);
}

TEST(ApplyAction, RotateSetsAbsoluteRelativeAngle) {
    const Design d = apply_action(chain_of({0, 0, 0}), RotateBrick{1, Angle::from_steps(6)});
    ASSERT_TRUE(d);
    EXPECT_EQ(d->size(), 3u);
    EXPECT_DOUBLE_EQ(d->bricks()[1].rel_angle.radians(), kPi / 2);
    // idempotent
    EXPECT_EQ(apply_action(d, RotateBrick{1, Angle::from_steps(6)}), d);
}

TEST(ApplyAction, HeadAddReanchorsAtNewStart) {
    const Design d = apply_action(chain_of({0}), AddBrick{ChainEnd::Head, Angle::from_steps(6)});
    ASSERT_TRUE(d);
    ASSERT_EQ(d->size(), 2u);
    // The old first brick keeps its absolute direction (+x) and position.
    EXPECT_EQ(d->absolute_angle(1).steps(), 0);
    const auto joints = chain_joints(*d);
    EXPECT_NEAR(joints[1].x, 0.0, 1e-15);
    EXPECT_NEAR(joints[1].y, 0.0, 1e-15);
    EXPECT_NEAR(joints[2].x, 1.0, 1e-15);
    // New head points along -pi/2, so it starts one unit above the old anchor.
    EXPECT_NEAR(d->anchor().y, 1.0, 1e-15);
}

TEST(ApplyAction, Errors) {
    EXPECT_EQ(code_of([] { apply_action(chain_of({0}), RotateBrick{1, Angle{}}); }), ErrorCode::IndexOutOfRange);
    EXPECT_EQ(code_of([] { apply_action(std::nullopt, RemoveBrick{}); }), ErrorCode::EmptyChain);
    EXPECT_EQ(code_of([] { apply_action(std::nullopt, RotateBrick{0, Angle{}}); }), ErrorCode::EmptyChain);
    Design full = std::vector<int>(kMaxBricks, 0).empty() ? Design{} : Design{BrickChain::from_steps(std::vector<int>(kMaxBricks, 0))};
    EXPECT_EQ(code_of([&] { apply_action(full, AddBrick{}); }), ErrorCode::ChainFull);
    EXPECT_EQ(code_of([] { action_from_json({{"type", "add"}, {"end", "tail"}, {"angle", 0.3}}); }),
              ErrorCode::UnquantizedAngle);
}

TEST(ChainVertices, SingleBrickCorners) {
    const auto rects = chain_vertices(chain_of({0}));
    ASSERT_EQ(rects.size(), 1u);
    const Rectangle expected{Vec2{0, -0.1}, Vec2{1, -0.1}, Vec2{1, 0.1}, Vec2{0, 0.1}};
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_NEAR(rects[0][i].x, expected[i].x, 1e-15);
        EXPECT_NEAR(rects[0][i].y, expected[i].y, 1e-15);
    }
}

TEST(ChainVertices, CumulativeAngles) {
    const auto joints = chain_joints(chain_of({0, 6}));
    EXPECT_NEAR(joints[1].x, 1.0, 1e-15);
    EXPECT_NEAR(joints[2].x, 1.0, 1e-15);
    EXPECT_NEAR(joints[2].y, 1.0, 1e-15);
}

TEST(ChainVertices, TwelveGonCloses) {
    const BrickChain ring = BrickChain::from_steps(std::vector<int>(12, 2));
    const auto joints = chain_joints(ring);
    // oracle: direct sum of unit vectors at k * pi/6
    double x = 0.0, y = 0.0;
    for (int k = 1; k <= 12; ++k) {
        x += std::cos(k * kPi / 6);
        y += std::sin(k * kPi / 6);
        EXPECT_NEAR(joints[static_cast<std::size_t>(k)].x, x, 1e-12);
        EXPECT_NEAR(joints[static_cast<std::size_t>(k)].y, y, 1e-12);
    }
    EXPECT_NEAR(joints.back().x, 0.0, 1e-9);
    EXPECT_NEAR(joints.back().y, 0.0, 1e-9);
}

TEST(ChainVertices, ConsecutiveRectanglesShareOneJoint) {
    Rng rng(11);
    for (int trial = 0; trial < 300; ++trial) {
        const BrickChain c = random_chain(rng, 1, kMaxBricks);
        const auto rects = chain_vertices(c);
        const auto joints = chain_joints(c);
        ASSERT_EQ(rects.size(), c.size());
        for (std::size_t i = 0; i + 1 < rects.size(); ++i) {
            const Vec2 end_mid = (rects[i][1] + rects[i][2]) * 0.5;
            const Vec2 start_mid = (rects[i + 1][0] + rects[i + 1][3]) * 0.5;
            EXPECT_LT((end_mid - start_mid).length(), 1e-12);
            EXPECT_LT((end_mid - joints[i + 1]).length(), 1e-12);
        }
    }
}

TEST(Replay, EmptyLogIsEmpty) { EXPECT_FALSE(replay(ActionLog{})); }

TEST(Replay, FoldsActions) {
    ActionLog log;
    const ActorId who{ActorKind::Human, "ana"};
    log.append(who, AddBrick{ChainEnd::Tail, Angle{}});
    log.append(who, AddBrick{ChainEnd::Tail, Angle::from_steps(6)});
    log.append(who, RemoveBrick{ChainEnd::Tail});
    const Design d = replay(log);
    ASSERT_TRUE(d);
    EXPECT_EQ(*d, chain_of({0}));
}

TEST(Replay, CorruptLogIsRejected) {
    ActionLog log;
    log.append({}, RemoveBrick{});
    EXPECT_EQ(code_of([&] { replay(log); }), ErrorCode::InvalidLog);
    ActionLog gap;
    gap.entries.push_back({1, {}, AddBrick{}});
    EXPECT_EQ(code_of([&] { replay(gap); }), ErrorCode::InvalidLog);
}

TEST(Replay, PropertyMatchesIncrementalChain) {
    Rng rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        ActionLog log;
        Design incremental;
        const int len = rng.uniform_int(0, 60);
        for (int i = 0; i < len; ++i) {
            Action a = random_legal_action(rng, incremental);
            incremental = apply_action(incremental, a);
            log.append({ActorKind::Agent, "gen"}, a);
        }
        EXPECT_EQ(replay(log), incremental);
        // and through the wire format
        EXPECT_EQ(replay(log_from_json(log_to_json(log))), incremental);
    }
}

TEST(ApplyAction, PropertyAddThenRemoveIsIdentity) {
    Rng rng(7);
    for (int trial = 0; trial < 500; ++trial) {
        const BrickChain c = random_chain(rng, 1, kMaxBricks - 1);
        const ChainEnd end = rng.uniform_int(0, 1) ? ChainEnd::Head : ChainEnd::Tail;
        const Design grown = apply_action(c, AddBrick{end, random_angle(rng)});
        const Design back = apply_action(grown, RemoveBrick{end});
        ASSERT_TRUE(back);
        EXPECT_TRUE(std::ranges::equal(back->bricks(), c.bricks()));
        // head re-anchoring round-trips through floating point
        EXPECT_NEAR(back->anchor().x, c.anchor().x, 1e-12);
        EXPECT_NEAR(back->anchor().y, c.anchor().y, 1e-12);
    }
}

TEST(ApplyAction, PropertyAnglesStayQuantized) {
    Rng rng(99);
    Design d;
    for (int i = 0; i < 5000; ++i) {
        d = apply_action(d, random_legal_action(rng, d));
        if (!d) continue;
        const Json j = design_to_json(d);
        for (const Json& a : j["angles"]) {
            const double steps = a.get<double>() / kAngleStep;
            EXPECT_NEAR(steps, std::round(steps), 1e-12);
            EXPECT_GE(a.get<double>(), -kPi);
            EXPECT_LT(a.get<double>(), kPi);
        }
        ASSERT_LE(d->size(), kMaxBricks);
    }
}

TEST(GenotypeDistance, Basics) {
    const BrickChain a = chain_of({0, 1, 2, 3});
    const BrickChain b = chain_of({0, 1, 3, 3});
    EXPECT_DOUBLE_EQ(genotype_distance(a, a), 0.0);
    EXPECT_DOUBLE_EQ(genotype_distance(a, b), kAngleStep);
    EXPECT_DOUBLE_EQ(genotype_distance(a, b), genotype_distance(b, a));
    EXPECT_DOUBLE_EQ(genotype_distance(chain_of({0}), chain_of({0, 0, 0})), 2 * kPi);
    // the difference wraps: -165 deg vs 165 deg are 30 deg apart
    EXPECT_DOUBLE_EQ(genotype_distance(chain_of({-11}), chain_of({11})), 2 * kAngleStep);
    EXPECT_DOUBLE_EQ(genotype_distance(chain_of({-12}), chain_of({0})), kPi);
    EXPECT_EQ(code_of([] { genotype_distance(Design{}, Design{chain_of({0})}); }), ErrorCode::EmptyChain);
}

TEST(GenotypeDistance, PropertyMetricOnEqualLengths) {
    Rng rng(5);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto len = static_cast<std::size_t>(rng.uniform_int(1, 10));
        const BrickChain a = random_chain(rng, len, len);
        const BrickChain b = random_chain(rng, len, len);
        const BrickChain c = random_chain(rng, len, len);
        EXPECT_EQ(genotype_distance(a, b), genotype_distance(b, a));
        EXPECT_EQ(genotype_distance(a, a), 0.0);
        EXPECT_LE(genotype_distance(a, c), genotype_distance(a, b) + genotype_distance(b, c) + 1e-12);
        if (!std::ranges::equal(a.bricks(), b.bricks())) EXPECT_GT(genotype_distance(a, b), 0.0);
    }
}

TEST(RandomChain, DeterministicGivenSeed) {
    Rng r1(42), r2(42);
    const BrickChain a = random_chain(r1, 5, 5);
    const BrickChain b = random_chain(r2, 5, 5);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.size(), 5u);
    Rng r3(42), r4(42);
    EXPECT_EQ(random_chain(r3, 1, 1), random_chain(r4, 1, 1));
}

TEST(RandomChain, BadBounds) {
    Rng rng(1);
    EXPECT_EQ(code_of([&] { random_chain(rng, 0, 3); }), ErrorCode::BadBounds);
    EXPECT_EQ(code_of([&] { random_chain(rng, 4, 3); }), ErrorCode::BadBounds);
    EXPECT_EQ(code_of([&] { random_chain(rng, 1, kMaxBricks + 1); }), ErrorCode::BadBounds);
}

TEST(RandomChain, LengthsAreUniform) {
    Rng rng(123);
    constexpr int kSamples = 10000;
    std::array<int, 9> counts{};
    for (int i = 0; i < kSamples; ++i) ++counts[random_chain(rng, 1, 8).size()];
    // binomial bound: mean n/8, sigma sqrt(n * 1/8 * 7/8)
    const double mean = kSamples / 8.0;
    const double sigma = std::sqrt(kSamples * (1.0 / 8.0) * (7.0 / 8.0));
    for (int len = 1; len <= 8; ++len) EXPECT_NEAR(counts[static_cast<std::size_t>(len)], mean, 3 * sigma) << len;
}

TEST(WireFormat, DesignRoundTripAndHash) {
    const BrickChain c = BrickChain::from_steps(std::vector<int>{0, -6, 6, 3}, {1.5, -2.0});
    const Json j = design_to_json(c);
    EXPECT_EQ(chain_from_json(j), c);
    EXPECT_EQ(design_hash(c), design_hash(chain_from_json(parse_json(j.dump()))));
    EXPECT_NE(design_hash(c), design_hash(chain_of({0, -6, 6, 3})));
    EXPECT_EQ(code_of([] {
                  chain_from_json({{"brick_length", 1.0}, {"brick_thickness", 0.2}, {"anchor", {0, 0}}, {"angles", Json::array()}});
              }),
              ErrorCode::EmptyChain);
    EXPECT_EQ(code_of([] { design_from_json({{"brick_length", 1.0}}); }), ErrorCode::ParseError);
}

TEST(WireFormat, ActionsAndActors) {
    for (const Action& a : {Action{AddBrick{ChainEnd::Head, Angle::from_steps(-3)}}, Action{RemoveBrick{ChainEnd::Tail}},
                            Action{RotateBrick{4, Angle::from_steps(11)}}})
        EXPECT_EQ(action_from_json(action_to_json(a)), a);
    const ActorId who{ActorKind::Agent, "run-1"};
    EXPECT_EQ(actor_from_json(actor_to_json(who)), who);
    EXPECT_EQ(code_of([] { actor_from_json({{"kind", "robot"}, {"id", "x"}}); }), ErrorCode::ParseError);
    EXPECT_EQ(code_of([] { action_from_json({{"type", "rotate"}, {"index", -1}, {"angle", 0.0}}); }),
              ErrorCode::IndexOutOfRange);
}
