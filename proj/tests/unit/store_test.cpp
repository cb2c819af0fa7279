#include <gtest/gtest.h>

#include <fstream>
#include <thread>

#include "coevo/error.hpp"
#include "coevo/shape_json.hpp"
#include "coevo/store.hpp"
#include "temp_dir.hpp"

using namespace coevo;
using namespace coevo::store;
using shape::ActorKind;
using shape::AddBrick;
using shape::Angle;
using shape::ChainEnd;
using shape::RemoveBrick;
using shape::RotateBrick;

namespace {

const ActorId kHuman{ActorKind::Human, "ana"};
const ActorId kAgent{ActorKind::Agent, "ga-1"};

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected coevo::Error";
    return ErrorCode::IoError;
}

AddBrick add(int steps, ChainEnd end = ChainEnd::Tail) { return {end, Angle::from_steps(steps)}; }

// Deterministic clock: 1000, 1001, ...
Clock ticking() {
    auto t = std::make_shared<std::int64_t>(1000);
    return [t] { return (*t)++; };
}

Clock frozen() {
    return [] { return std::int64_t{5}; };
}

challenges::EpisodeResult result_with(double score, std::string hash = "h") {
    challenges::EpisodeResult r;
    r.score = score;
    r.design_hash = std::move(hash);
    return r;
}

std::size_t line_count(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) ++n;
    return n;
}

struct Crash {};

}  // namespace

class StoreTest : public ::testing::Test {
protected:
    checks::TempDir tmp;
    Store store{tmp.path(), ticking()};
};

TEST_F(StoreTest, LayoutAndFirstAppend) {
    const SessionRecord r = store.create_session(kHuman, "collect");
    EXPECT_FALSE(r.final_design);
    EXPECT_TRUE(std::filesystem::exists(tmp.path() / "sessions" / (r.session_id + ".jsonl")));
    EXPECT_TRUE(std::filesystem::exists(tmp.path() / "sessions" / (r.session_id + ".meta.json")));
    EXPECT_TRUE(std::filesystem::exists(tmp.path() / "index.json"));
    const AppendResult a = store.append_action(r.session_id, add(0), kHuman);
    EXPECT_EQ(a.seq, 0u);
    ASSERT_TRUE(a.chain);
    EXPECT_EQ(a.chain->size(), 1u);
}

TEST_F(StoreTest, TwoAppendsReplayAsFold) {
    const std::string id = store.create_session(kHuman, "move").session_id;
    EXPECT_EQ(store.append_action(id, add(0), kHuman).seq, 0u);
    EXPECT_EQ(store.append_action(id, add(3), kAgent).seq, 1u);
    const Replay r = store.get_replay(id);
    ASSERT_EQ(r.log.entries.size(), 2u);
    const shape::Design folded = shape::apply_action(shape::apply_action({}, add(0)), add(3));
    EXPECT_EQ(r.chain, folded);
    EXPECT_EQ(r.log.entries[1].actor, kAgent);
}

TEST_F(StoreTest, InvalidActionLeavesLogUnchanged) {
    const std::string id = store.create_session(kHuman, "move").session_id;
    store.append_action(id, add(0), kHuman);
    const auto log = tmp.path() / "sessions" / (id + ".jsonl");
    const std::size_t lines = line_count(log);
    try {
        store.append_action(id, RotateBrick{99, Angle::from_steps(1)}, kHuman);
        FAIL() << "expected InvalidAction";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidAction);
        EXPECT_EQ(e.cause(), ErrorCode::IndexOutOfRange);
    }
    EXPECT_EQ(line_count(log), lines);
    EXPECT_EQ(store.get_session(id).log.entries.size(), 1u);
    EXPECT_EQ(Store(tmp.path()).get_session(id).log.entries.size(), 1u);
}

TEST_F(StoreTest, UnknownSessionEverywhere) {
    EXPECT_EQ(code_of([&] { store.append_action("nope", add(0), kHuman); }), ErrorCode::UnknownSession);
    EXPECT_EQ(code_of([&] { store.get_session("nope"); }), ErrorCode::UnknownSession);
    EXPECT_EQ(code_of([&] { store.get_replay("nope"); }), ErrorCode::UnknownSession);
    EXPECT_EQ(code_of([&] { store.get_session("../index"); }), ErrorCode::UnknownSession);
}

TEST_F(StoreTest, ReplayPrefixes) {
    const std::string id = store.create_session(kHuman, "cut").session_id;
    EXPECT_EQ(code_of([&] { store.get_replay(id, 0); }), ErrorCode::SeqOutOfRange);
    for (int s : {0, 2, -2}) store.append_action(id, add(s), kHuman);
    const Replay full = store.get_replay(id);
    EXPECT_EQ(full.log.entries.size(), 3u);
    EXPECT_EQ(full.chain->size(), 3u);
    const Replay first = store.get_replay(id, 0);
    ASSERT_EQ(first.log.entries.size(), 1u);
    EXPECT_EQ(first.chain->size(), 1u);
    EXPECT_EQ(store.get_replay(id, 2).chain, full.chain);
    EXPECT_EQ(code_of([&] { store.get_replay(id, 3); }), ErrorCode::SeqOutOfRange);
}

TEST_F(StoreTest, SessionRoundTripThroughDisk) {
    const std::string id = store.create_session(kAgent, "protect").session_id;
    store.append_action(id, add(0), kAgent);
    store.append_action(id, add(6, ChainEnd::Head), kHuman);
    store.append_action(id, RemoveBrick{ChainEnd::Tail}, kHuman);
    challenges::EpisodeResult res = challenges::run_episode(challenges::default_spec(challenges::ChallengeId::Protect),
                                                            store.get_session(id).final_design, 0);
    store.record_session_result(id, res);

    const SessionRecord in_memory = store.get_session(id);
    const SessionRecord reopened = Store(tmp.path()).get_session(id);
    EXPECT_EQ(canonical_dump(session_to_json(reopened)), canonical_dump(session_to_json(in_memory)));
    EXPECT_EQ(canonical_dump(session_to_json(session_from_json(parse_json(session_to_json(in_memory).dump())))),
              canonical_dump(session_to_json(in_memory)));
    EXPECT_EQ(shape::replay(reopened.log), reopened.final_design);
}

TEST_F(StoreTest, BestResultMustBeReachableAndOnlyImproves) {
    const std::string id = store.create_session(kHuman, "move").session_id;
    store.append_action(id, add(0), kHuman);
    const std::string h1 = shape::design_hash(*store.get_session(id).final_design);
    store.append_action(id, add(2), kHuman);
    EXPECT_EQ(code_of([&] { store.record_session_result(id, result_with(0.5, "not-a-hash")); }), ErrorCode::InvalidAction);
    EXPECT_EQ(store.record_session_result(id, result_with(0.5, h1)).best_result->score, 0.5);
    EXPECT_EQ(store.record_session_result(id, result_with(0.2, h1)).best_result->score, 0.5);
}

TEST_F(StoreTest, CrashAfterLogLineKeepsOldState) {
    const std::string id = store.create_session(kHuman, "move").session_id;
    store.append_action(id, add(0), kHuman);
    for (CrashPoint point : {CrashPoint::LogAppended, CrashPoint::MetaTempWritten}) {
        store.set_crash_hook([point](CrashPoint p) {
            if (p == point) throw Crash{};
        });
        EXPECT_THROW(store.append_action(id, add(1), kHuman), Crash);
        store.set_crash_hook({});

        Store recovered(tmp.path());
        const SessionRecord r = recovered.get_session(id);
        EXPECT_EQ(r.log.entries.size(), 1u);
        EXPECT_EQ(r.final_design->size(), 1u);
        EXPECT_EQ(shape::replay(r.log), r.final_design);
        // The orphan line is gone, so the header plus one entry remain.
        EXPECT_EQ(line_count(tmp.path() / "sessions" / (id + ".jsonl")), 2u);
    }
    // The same store object recovers too.
    EXPECT_EQ(store.append_action(id, add(1), kHuman).seq, 1u);
    EXPECT_EQ(Store(tmp.path()).get_session(id).log.entries.size(), 2u);
}

TEST_F(StoreTest, TornTrailingLineIsDiscarded) {
    const std::string id = store.create_session(kHuman, "move").session_id;
    store.append_action(id, add(0), kHuman);
    {
        std::ofstream out(tmp.path() / "sessions" / (id + ".jsonl"), std::ios::app);
        out << "{\"seq\": 1, \"act";
    }
    Store recovered(tmp.path());
    EXPECT_EQ(recovered.get_session(id).log.entries.size(), 1u);
    EXPECT_EQ(recovered.append_action(id, add(1), kHuman).seq, 1u);
    EXPECT_EQ(Store(tmp.path()).get_replay(id).chain->size(), 2u);
}

TEST_F(StoreTest, ConsistentUnderRandomCrashes) {
    const std::string id = store.create_session(kHuman, "collect").session_id;
    Rng rng(31);
    std::size_t committed = 0;
    for (int i = 0; i < 60; ++i) {
        const bool crash = rng.below(3) == 0;
        const CrashPoint point = rng.below(2) == 0 ? CrashPoint::LogAppended : CrashPoint::MetaTempWritten;
        store.set_crash_hook([crash, point](CrashPoint p) {
            if (crash && p == point) throw Crash{};
        });
        const SessionRecord before = Store(tmp.path()).get_session(id);
        shape::Action action = add(static_cast<int>(rng.below(24)) - 12);
        if (before.final_design && before.final_design->size() > 1 && rng.below(2) == 0) action = RemoveBrick{};
        try {
            store.append_action(id, action, kHuman);
            ++committed;
        } catch (const Crash&) {
        }
        const SessionRecord after = Store(tmp.path()).get_session(id);
        ASSERT_EQ(after.log.entries.size(), committed);
        ASSERT_EQ(shape::replay(after.log), after.final_design);
    }
}

TEST_F(StoreTest, ListsSessionsInCreationOrder) {
    const std::string a = store.create_session(kHuman, "collect").session_id;
    const std::string b = store.create_session(kAgent, "cut").session_id;
    EXPECT_NE(a, b);
    EXPECT_EQ(store.list_sessions(), (std::vector<std::string>{a, b}));
    EXPECT_EQ(Store(tmp.path()).list_sessions(), (std::vector<std::string>{a, b}));
}

TEST_F(StoreTest, LeaderboardExamples) {
    EXPECT_TRUE(store.leaderboard("collect").empty());
    EXPECT_EQ(store.record_result("collect", kHuman, result_with(0.4)), 1);
    EXPECT_EQ(store.record_result("collect", kAgent, result_with(0.6)), 1);
    EXPECT_EQ(store.leaderboard("collect")[1].actor, kHuman);
    EXPECT_EQ(store.record_result("collect", kHuman, result_with(0.3)), 2);
    const auto board = store.leaderboard("collect");
    ASSERT_EQ(board.size(), 2u);
    EXPECT_EQ(board[1].score, 0.4);
    EXPECT_TRUE(store.leaderboard("move").empty());
    EXPECT_EQ(code_of([&] { store.record_result("collect", kHuman, result_with(1.5)); }), ErrorCode::ParseError);
}

TEST(Leaderboard, TiesGoToTheEarlierRecord) {
    checks::TempDir tmp;
    Store store(tmp.path(), frozen());
    const ActorId c{ActorKind::Human, "c"};
    store.record_result("move", kAgent, result_with(0.5));
    store.record_result("move", kHuman, result_with(0.5));
    EXPECT_EQ(store.record_result("move", c, result_with(0.5)), 3);
    const auto board = store.leaderboard("move");
    EXPECT_EQ(board[0].actor, kAgent);
    EXPECT_EQ(board[1].actor, kHuman);
}

TEST(Leaderboard, MonotoneAndBoundedUnderRandomPosts) {
    checks::TempDir tmp;
    Store store(tmp.path(), ticking());
    Rng rng(8);
    std::map<std::pair<std::string, std::string>, double> best;
    const std::vector<std::string> ids{"collect", "move"};
    for (int i = 0; i < 200; ++i) {
        const std::string& ch = ids[rng.below(2)];
        const ActorId actor{rng.below(2) ? ActorKind::Human : ActorKind::Agent, "a" + std::to_string(rng.below(4))};
        const double score = rng.uniform01();
        store.record_result(ch, actor, result_with(score));
        double& b = best[{ch, actor.id + (actor.kind == ActorKind::Human ? "h" : "a")}];
        b = std::max(b, score);
    }
    for (const std::string& ch : ids) {
        const auto board = store.leaderboard(ch);
        for (std::size_t i = 0; i < board.size(); ++i) {
            EXPECT_GE(board[i].score, 0.0);
            EXPECT_LE(board[i].score, 1.0);
            if (i > 0) EXPECT_GE(board[i - 1].score, board[i].score);
            const auto key = std::make_pair(ch, board[i].actor.id + (board[i].actor.kind == ActorKind::Human ? "h" : "a"));
            EXPECT_EQ(board[i].score, best.at(key));
        }
    }
}

TEST_F(StoreTest, RunsRoundTrip) {
    evolve::EvoParams p;
    p.population_size = 4;
    p.master_seed = 3;
    p.eval_threads = 1;
    const std::string id = store.new_run_id();
    const evolve::RunState s = evolve::init_run(challenges::default_spec(challenges::ChallengeId::Move), p, id);
    store.save_run(s);
    EXPECT_EQ(canonical_dump(evolve::run_state_to_json(store.load_run(id))), canonical_dump(evolve::run_state_to_json(s)));
    EXPECT_NE(store.new_run_id(), id);
    EXPECT_EQ(store.list_runs(), std::vector<std::string>{id});
    EXPECT_EQ(Store(tmp.path()).new_run_id(), "r000002");
    EXPECT_EQ(code_of([&] { store.load_run("r999"); }), ErrorCode::UnknownRun);
    EXPECT_EQ(code_of([&] { store.load_run("../x"); }), ErrorCode::UnknownRun);
}

TEST_F(StoreTest, ConcurrentAppendersOnDistinctSessions) {
    std::vector<std::string> ids;
    for (int i = 0; i < 4; ++i) ids.push_back(store.create_session(kHuman, "collect").session_id);
    std::vector<std::thread> threads;
    for (const std::string& id : ids)
        threads.emplace_back([&, id] {
            for (int k = 0; k < 20; ++k) store.append_action(id, add(k % 5), kHuman);
        });
    for (auto& t : threads) t.join();
    for (const std::string& id : ids) {
        const SessionRecord r = Store(tmp.path()).get_session(id);
        EXPECT_EQ(r.log.entries.size(), 20u);
        EXPECT_EQ(r.final_design->size(), 20u);
    }
}
