// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <httplib.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <thread>

#include "coevo/api.hpp"
#include "coevo/challenges.hpp"
#include "coevo/evolve.hpp"
#include "coevo/physics/world.hpp"
#include "coevo/shape_json.hpp"
#include "coevo/store.hpp"
#include "evolve_checks.hpp"
#include "schema_check.hpp"
#include "temp_dir.hpp"

using namespace coevo;
using challenges::ChallengeId;
using challenges::EpisodeResult;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* pattern, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, pattern, args...);
    return buf;
}

struct Report {
    int failed = 0;
    void line(int n, const std::string& name, bool pass, const std::string& detail) {
        std::printf("%s [%d] %s: %s\n", pass ? "PASS" : "FAIL", n, name.c_str(), detail.c_str());
        std::fflush(stdout);
        failed += !pass;
    }
};

shape::BrickChain chain_of(std::initializer_list<int> steps) {
    std::vector<shape::Brick> bricks;
    for (int s : steps) bricks.push_back({shape::Angle::from_steps(s)});
    return shape::BrickChain({0.0, 0.0}, std::move(bricks));
}

const shape::BrickChain kBowl8 = chain_of({-6, 0, 6, 0, 0, 0, 6, 0});
const shape::BrickChain kBar8 = chain_of({0, 0, 0, 0, 0, 0, 0, 0});
const shape::BrickChain kBar12 = chain_of({0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0});
const shape::BrickChain kPolygon12 = chain_of({2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2});

// Runs checked for archive soundness.
std::vector<std::string> g_archive_problems;
int g_archive_runs = 0;

void check_archive(const evolve::RunState& state, const std::string& label) {
    ++g_archive_runs;
    if (const std::string v = checks::archive_violation(state); !v.empty()) g_archive_problems.push_back(label + ": " + v);
}

// ---- 1
void determinism(Report& report) {
    const auto t0 = Clock::now();
    Rng rng(101);
    int identical = 0, total = 0;
    for (ChallengeId id : challenges::kAllChallenges) {
        const auto& spec = challenges::default_spec(id);
        for (int i = 0; i < 20; ++i) {
            const shape::BrickChain design = shape::random_chain(rng, 1, 12);
            const std::uint64_t seed = rng.next();
            const challenges::RunOptions options{true, 2};
            const EpisodeResult a = challenges::run_episode(spec, design, seed, options);
            const EpisodeResult b = challenges::run_episode(spec, design, seed, options);
            ++total;
            identical += challenges::result_to_json(a).dump() == challenges::result_to_json(b).dump() &&
                         challenges::frames_to_jsonl(a.frames) == challenges::frames_to_jsonl(b.frames);
        }
    }
    const double secs = seconds_since(t0);
    report.line(1, "determinism", identical == total && secs < 60.0,
                fmt("%d/%d designs byte-identical over 2 evaluations (results and frames), %.1f s (limit 60 s)", identical,
                    total, secs));
}

// ---- 2
void score_bounds(Report& report) {
    Rng rng(202);
    int in_range = 0, total = 0;
    for (ChallengeId id : challenges::kAllChallenges) {
        const auto& spec = challenges::default_spec(id);
        for (int i = 0; i < 200; ++i) {
            const EpisodeResult r = challenges::run_episode(spec, shape::random_chain(rng, 1, 16), rng.next());
            ++total;
            in_range += r.score >= 0.0 && r.score <= 1.0 && std::isfinite(r.score);
        }
    }
    // A design that cannot move: the Move layout with the design held static.
    challenges::ChallengeSpec still = challenges::default_spec(ChallengeId::Move);
    still.design_dynamic = false;
    const double never_moves = challenges::run_episode(still, kPolygon12, challenges::kDefaultSeed).score;
    const std::vector<Vec2> constant_track(100, Vec2{0.0, 0.0});
    const auto& move_goal = std::get<challenges::MoveGoal>(still.goal);
    const double constant_track_score = challenges::score_move(constant_track, move_goal.target - move_goal.start).score;

    // No ball retained: balls dropped beside a vertical stick all fall away.
    challenges::ChallengeSpec beside = challenges::default_spec(ChallengeId::Collect);
    for (challenges::SpawnBlueprint& b : beside.spawns) b.position.x = 6.0;
    const EpisodeResult none = challenges::run_episode(beside, chain_of({6}), 3);

    report.line(2, "score-bound fuzz", in_range == total && never_moves == 0.0 && constant_track_score == 0.0 &&
                                           none.score == 0.0 && none.metrics.at("balls_collected") == 0.0,
                fmt("%d/%d scores in [0,1]; never-moves Move = %g (episode), %g (constant track); no-balls-retained "
                    "Collect = %g",
                    in_range, total, never_moves, constant_track_score, none.score));
}

// ---- 3
void physics_oracles(Report& report) {
    using namespace physics;
    const auto box = [](double hw, double hh, Vec2 c, Material m = {}) {
        return RigidBody::make_dynamic({Polygon::box(hw, hh, c)}, 1.0, m, BodyTag::Ball);
    };

    // Free fall against the accumulated sum of g*dt.
    World fall;
    fall.add_body(box(0.5, 0.5, {0.0, 100.0}));
    double v = 0.0, y = 100.0;
    bool exact = true;
    for (int k = 0; k < 240; ++k) {
        fall.step();
        v += fall.settings().gravity.y * fall.settings().dt;
        y += v * fall.settings().dt;
        exact = exact && fall.body(0).linear_velocity.y == v && fall.body(0).position.y == y;
    }

    // Head-on, equal masses, restitution 1, no gravity.
    const auto pair = [&](double va, double vb) {
        WorldSettings s;
        s.gravity = {0.0, 0.0};
        World w(s);
        RigidBody a = box(0.5, 0.5, {-1.0, 0.0}, {0.0, 1.0});
        RigidBody b = box(0.5, 0.5, {1.0, 0.0}, {0.0, 1.0});
        a.linear_velocity = {va, 0.0};
        b.linear_velocity = {vb, 0.0};
        w.add_body(a);
        w.add_body(b);
        for (int k = 0; k < 120; ++k) w.step();
        return w;
    };
    const World swapped = pair(1.0, -1.0);
    const double swap_err = std::max(std::abs(swapped.body(0).linear_velocity.x + 1.0) / 1.0,
                                     std::abs(swapped.body(1).linear_velocity.x - 1.0) / 1.0);

    double worst_momentum = 0.0;
    for (double vb : {-1.0, -3.0, 0.0, 0.5}) {
        const World w = pair(2.0, vb);
        const double p0 = 2.0 + vb;
        Vec2 p1;
        for (const RigidBody& b : w.bodies()) p1 += b.linear_velocity * b.mass;
        worst_momentum = std::max(worst_momentum, std::hypot(p1.x - p0, p1.y) / std::abs(p0));
    }

    // Box dropped on the ground, then held for 300 steps.
    World rest;
    rest.add_body(RigidBody::make_static({Polygon::box(50.0, 1.0, {0.0, -1.0})}, {}, BodyTag::Ground));
    rest.add_body(box(0.5, 0.5, {0.0, 2.0}));
    for (int k = 0; k < 300; ++k) rest.step();
    const double penetration = std::max(0.0, -(rest.body(1).position.y - 0.5));

    const bool pass = exact && swap_err <= 0.02 && worst_momentum <= 1e-6 && penetration <= rest.settings().slop;
    report.line(3, "physics oracles", pass,
                fmt("free fall exact over 240 steps: %s; elastic swap error %.3g%% (limit 2%%); momentum drift %.2g "
                    "relative (limit 1e-6); resting penetration %.3g <= slop %.3g",
                    exact ? "yes" : "no", swap_err * 100.0, worst_momentum, penetration, rest.settings().slop));
}

// ---- 4
shape::Action random_legal_action(Rng& rng, const shape::Design& current) {
    using namespace shape;
    const std::size_t n = current ? current->size() : 0;
    const auto angle = [&] { return Angle::from_steps(rng.uniform_int(-12, 11)); };
    const auto end = [&] { return rng.uniform_int(0, 1) ? ChainEnd::Head : ChainEnd::Tail; };
    for (;;) {
        switch (rng.uniform_int(0, 2)) {
            case 0:
                if (n < kMaxBricks) return AddBrick{end(), angle()};
                break;
            case 1:
                if (n >= 1) return RemoveBrick{end()};
                break;
            default:
                if (n >= 1) return RotateBrick{static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(n) - 1)), angle()};
        }
    }
}

void replay_fidelity(Report& report) {
    checks::TempDir tmp;
    store::Store store(tmp.path());
    Rng rng(404);
    int exact = 0, through_store = 0, stored = 0;
    for (int trial = 0; trial < 500; ++trial) {
        shape::ActionLog log;
        shape::Design incremental;
        const shape::ActorId actor{trial % 2 ? shape::ActorKind::Agent : shape::ActorKind::Human, "a"};
        const bool persist = trial % 20 == 0;
        std::string session;
        if (persist) session = store.create_session(actor, "move").session_id;
        const int len = rng.uniform_int(1, 80);
        for (int i = 0; i < len; ++i) {
            const shape::Action a = random_legal_action(rng, incremental);
            incremental = shape::apply_action(incremental, a);
            log.append(actor, a);
            if (persist) store.append_action(session, a, actor);
        }
        exact += shape::replay(log) == incremental && shape::replay(shape::log_from_json(shape::log_to_json(log))) == incremental;
        if (persist) {
            ++stored;
            through_store += store.get_replay(session).chain == incremental;
        }
    }
    report.line(4, "replay fidelity", exact == 500 && through_store == stored,
                fmt("%d/500 random action sequences replay to the incremental chain (in memory and via JSON); %d/%d via "
                    "the session store",
                    exact, through_store, stored));
}

// ---- 5
void elitism(Report& report) {
    const auto t0 = Clock::now();
    int monotone = 0, improved = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        evolve::EvoParams params;
        params.population_size = 16;
        params.master_seed = seed;
        evolve::RunState state = evolve::init_run(challenges::default_spec(ChallengeId::Move), params);
        evolve::Evaluator evaluator = evolve::make_evaluator(state);
        while (state.generation < 20) state = evolve::next_generation(std::move(state), evaluator);
        monotone += checks::history_non_decreasing(state);
        improved += state.history.at(20).best > state.history.at(0).best;
        check_archive(state, "elitism seed " + std::to_string(seed));
    }
    report.line(5, "elitism monotonicity", monotone == 20 && improved >= 19,
                fmt("history.best non-decreasing in %d/20 runs; gen 20 > gen 0 in %d/20 (need >= 19); %.1f s", monotone,
                    improved, seconds_since(t0)));
}

// ---- 6
void fig1(Report& report) {
    const auto& spec = challenges::default_spec(ChallengeId::Collect);
    const double bowl = challenges::run_episode(spec, kBowl8, challenges::kDefaultSeed).score;
    const double bar = challenges::run_episode(spec, kBar8, challenges::kDefaultSeed).score;
    report.line(6, "bowl beats bar on collect", bowl > bar, fmt("8-brick bowl %.4f vs 8-brick bar %.4f", bowl, bar));
}

// ---- 7
void fig3(Report& report) {
    const auto t0 = Clock::now();
    const auto& spec = challenges::default_spec(ChallengeId::Move);
    const double polygon = challenges::run_episode(spec, kPolygon12, challenges::kDefaultSeed).score;
    const double bar = challenges::run_episode(spec, kBar12, challenges::kDefaultSeed).score;

    evolve::EvoParams params;
    params.population_size = 32;
    params.master_seed = 1;
    evolve::RunState state = evolve::init_run(spec, params);
    evolve::Evaluator evaluator = evolve::make_evaluator(state);
    while (state.generation < 40) state = evolve::next_generation(std::move(state), evaluator);
    check_archive(state, "fig3 run");
    const double evolved = challenges::run_episode(spec, state.best_ever->genotype, challenges::kDefaultSeed).score;
    const double secs = seconds_since(t0);
    report.line(7, "polygon and evolved designs beat bar on move", polygon > bar && evolved > bar && secs < 300.0,
                fmt("12-gon %.4f, evolved best (pop 32, 40 gens) %.4f, 12-brick bar %.4f; %.1f s (limit 300 s)", polygon,
                    evolved, bar, secs));
}

// ---- 8
void injection(Report& report) {
    const auto& spec = challenges::default_spec(ChallengeId::Move);
    evolve::EvoParams params;
    params.population_size = 16;
    params.master_seed = 8;
    evolve::RunState state = evolve::init_run(spec, params);
    evolve::Evaluator evaluator = evolve::make_evaluator(state);
    for (int g = 0; g < 3; ++g) state = evolve::next_generation(std::move(state), evaluator);

    // Pre-evaluated independently of the run's evaluator.
    const double good = challenges::run_episode(spec, kPolygon12, state.eval_seed).score;
    const double before = state.best_ever->fitness.value();
    const Rng rng_before = state.rng;
    evolve::RunState control = state;

    evolve::RunState injected = evolve::inject(state, kPolygon12, {shape::ActorKind::Human, "acceptance"}, evaluator);
    const bool raised = good > before && injected.best_ever->fitness == good && injected.generation == state.generation &&
                        injected.history.back().best == good;
    bool isolated = injected.rng == rng_before;
    Rng a = injected.rng, b = control.rng;
    for (int i = 0; i < 1000; ++i) isolated = isolated && a.next() == b.next();

    // Both continue; the injected run keeps its best.
    for (int g = 0; g < 3; ++g) {
        injected = evolve::next_generation(std::move(injected), evaluator);
        control = evolve::next_generation(std::move(control), evaluator);
    }
    const bool kept = injected.best_ever->fitness.value() >= good && checks::history_non_decreasing(injected);
    check_archive(injected, "injection run");
    check_archive(control, "injection control run");
    report.line(8, "injection continuity", raised && isolated && kept,
                fmt("best_ever %.4f -> %.4f at generation %d (pre-evaluated %.4f); rng state and next 1000 draws %s; "
                    "best after 3 more generations %.4f",
                    before, injected.history.at(3).best, state.generation, good, isolated ? "unchanged" : "CHANGED",
                    injected.best_ever->fitness.value()));
}

// ---- 10
struct ApiProbe {
    httplib::Client& client;
    const checks::SchemaChecker& schema;
    const Json& routes;
    std::set<std::string> error_codes;
    std::set<std::string> covered;  // method + template with a 2xx response
    std::vector<std::string> problems;
    int responses = 0;

    const Json* route(const std::string& method, const std::string& tmpl) const {
        for (const Json& r : routes)
            if (r["method"] == method && r["path"] == tmpl) return &r;
        return nullptr;
    }

    Json call(const std::string& method, const std::string& tmpl, const std::string& path, const Json& body = nullptr,
              int expect = 0) {
        httplib::Result res = method == "GET" ? client.Get(path)
                                              : client.Post(path, body.is_null() ? "" : body.dump(), "application/json");
        if (!res) {
            problems.push_back(method + " " + path + ": no response");
            return Json();
        }
        ++responses;
        const Json parsed = Json::parse(res->body, nullptr, false);
        const std::string where = method + " " + path + " -> " + std::to_string(res->status);
        if (parsed.is_discarded()) {
            problems.push_back(where + ": body is not JSON");
            return Json();
        }
        if (expect && res->status != expect) problems.push_back(where + ": expected " + std::to_string(expect) + " " + res->body);
        std::string definition = "ApiError";
        if (const Json* r = route(method, tmpl)) {
            const std::string status = std::to_string(res->status);
            if (!r->at("responses").contains(status)) problems.push_back(where + ": status not declared for the route");
            else definition = r->at("responses")[status];
        } else if (!tmpl.empty()) {
            problems.push_back(where + ": no route " + tmpl);
        }
        for (const std::string& e : schema.check(parsed, definition)) problems.push_back(where + " vs " + definition + ": " + e);
        if (res->status >= 400 && !error_codes.count(parsed.value("code", ""))) problems.push_back(where + ": code outside the set");
        if (res->status < 300) covered.insert(method + " " + tmpl);
        return parsed;
    }
};

void api_contract(Report& report) {
    checks::TempDir tmp;
    const checks::SchemaChecker schema = checks::SchemaChecker::from_file(COEVO_SOURCE_DIR "/schemas/api.schema.json");
    api::ServiceConfig config;
    config.data_dir = tmp.path();
    config.port = 0;
    api::Service service(config);
    const int port = service.bind();
    std::thread server([&] { service.run(); });
    httplib::Client client("127.0.0.1", port);
    client.set_read_timeout(300, 0);

    ApiProbe p{client, schema, schema.root()["x-routes"], {}, {}, {}, 0};
    for (std::string_view c : api::error_codes()) p.error_codes.insert(std::string(c));

    const Json human{{"kind", "human"}, {"id", "ana"}};
    const Json wheel = shape::design_to_json(kPolygon12);
    const Json bar = Json{{"angles", Json::array({0.0, 0.0, 0.0})}};

    const Json list = p.call("GET", "/v1/challenges", "/v1/challenges");
    std::vector<std::string> ids;
    for (const Json& c : list.value("challenges", Json::array())) ids.push_back(c.value("id", ""));
    const bool four = ids == std::vector<std::string>{"collect", "protect", "move", "cut"};
    p.call("GET", "/v1/challenges/{id}", "/v1/challenges/move", nullptr, 200);
    p.call("GET", "/v1/challenges/{id}", "/v1/challenges/fly", nullptr, 404);

    const Json evaluated = p.call("POST", "/v1/evaluate", "/v1/evaluate", {{"challenge_id", "move"}, {"design", wheel}, {"frames", true}}, 200);
    p.call("POST", "/v1/evaluate", "/v1/evaluate", {{"challenge_id", "move"}, {"design", {{"angles", Json::array()}}}}, 400);
    p.call("POST", "/v1/evaluate", "/v1/evaluate", {{"challenge_id", "fly"}, {"design", wheel}}, 404);
    p.call("GET", "/v1/frames/{id}", evaluated.value("frames_ref", "/v1/frames/missing"), nullptr, 200);
    p.call("GET", "/v1/frames/{id}", "/v1/frames/fabc", nullptr, 404);

    const std::string sid = p.call("POST", "/v1/sessions", "/v1/sessions", {{"actor", human}, {"challenge_id", "collect"}}, 201).value("session_id", "");
    p.call("POST", "/v1/sessions", "/v1/sessions", {{"actor", {{"kind", "robot"}}}, {"challenge_id", "collect"}}, 400);
    p.call("POST", "/v1/sessions", "/v1/sessions", {{"actor", human}, {"challenge_id", "fly"}}, 404);
    p.call("GET", "/v1/sessions", "/v1/sessions", nullptr, 200);
    const std::string sp = "/v1/sessions/" + sid;
    p.call("POST", "/v1/sessions/{id}/evaluate", sp + "/evaluate", Json::object(), 400);
    for (int s : {-6, 0, 6, 0, 0, 0, 6, 0})
        p.call("POST", "/v1/sessions/{id}/actions", sp + "/actions",
               {{"action", {{"type", "add"}, {"end", "tail"}, {"angle", s * 3.141592653589793 / 12}}}}, 200);
    p.call("POST", "/v1/sessions/{id}/actions", sp + "/actions", {{"action", {{"type", "rotate"}, {"index", 40}, {"angle", 0.0}}}}, 400);
    p.call("POST", "/v1/sessions/{id}/actions", "/v1/sessions/s999999/actions", {{"action", {{"type", "remove"}, {"end", "tail"}}}}, 404);
    p.call("GET", "/v1/sessions/{id}", sp, nullptr, 200);
    p.call("GET", "/v1/sessions/{id}", "/v1/sessions/s999999", nullptr, 404);
    const Json first = p.call("GET", "/v1/sessions/{id}/replay", sp + "/replay?upto=0", nullptr, 200);
    const bool one_brick = first["chain"]["angles"].size() == 1;
    p.call("GET", "/v1/sessions/{id}/replay", sp + "/replay", nullptr, 200);
    p.call("GET", "/v1/sessions/{id}/replay", sp + "/replay?upto=99", nullptr, 400);
    p.call("GET", "/v1/sessions/{id}/replay", "/v1/sessions/s999999/replay", nullptr, 404);
    p.call("POST", "/v1/sessions/{id}/evaluate", sp + "/evaluate", Json::object(), 200);
    p.call("POST", "/v1/sessions/{id}/evaluate", "/v1/sessions/s999999/evaluate", Json::object(), 404);

    const std::string rid = p.call("POST", "/v1/runs", "/v1/runs", {{"challenge_id", "move"}, {"params", {{"population_size", 8}, {"master_seed", 3}}}}, 201).value("run_id", "");
    p.call("POST", "/v1/runs", "/v1/runs", {{"challenge_id", "move"}, {"params", {{"tournament_k", 0}}}}, 400);
    p.call("POST", "/v1/runs", "/v1/runs", {{"challenge_id", "fly"}}, 404);
    const Json defaults = p.call("POST", "/v1/runs", "/v1/runs", {{"challenge_id", "cut"}}, 201);
    const Json default_view = p.call("GET", "/v1/runs/{id}", "/v1/runs/" + defaults.value("run_id", ""), nullptr, 200);
    const bool default_pop = default_view["population"].size() == 32 && default_view["generation"] == 0;
    p.call("GET", "/v1/runs", "/v1/runs", nullptr, 200);
    const std::string rp = "/v1/runs/" + rid;
    p.call("POST", "/v1/runs/{id}/advance", rp + "/advance", {{"generations", 5}}, 202);
    p.call("POST", "/v1/runs/{id}/advance", rp + "/advance", {{"generations", -1}}, 400);
    p.call("POST", "/v1/runs/{id}/advance", "/v1/runs/r999999/advance", {{"generations", 1}}, 404);
    service.wait_idle();
    const Json advanced = p.call("GET", "/v1/runs/{id}", rp, nullptr, 200);
    const bool plus_five = advanced["generation"] == 5;
    p.call("GET", "/v1/runs/{id}", "/v1/runs/r999999", nullptr, 404);
    p.call("GET", "/v1/runs/{id}/archive", rp + "/archive", nullptr, 200);
    p.call("GET", "/v1/runs/{id}/archive", "/v1/runs/r999999/archive", nullptr, 404);
    p.call("POST", "/v1/runs/{id}/pause", rp + "/pause", nullptr, 200);
    p.call("POST", "/v1/runs/{id}/pause", rp + "/pause", nullptr, 409);
    p.call("POST", "/v1/runs/{id}/pause", "/v1/runs/r999999/pause", nullptr, 404);
    p.call("POST", "/v1/runs/{id}/resume", rp + "/resume", nullptr, 200);
    p.call("POST", "/v1/runs/{id}/resume", "/v1/runs/r999999/resume", nullptr, 404);
    p.call("POST", "/v1/runs/{id}/inject", rp + "/inject", {{"design", wheel}, {"actor", human}}, 200);
    p.call("POST", "/v1/runs/{id}/inject", rp + "/inject", {{"design", {{"angles", {0.2}}}}, {"actor", human}}, 400);
    p.call("POST", "/v1/runs/{id}/inject", "/v1/runs/r999999/inject", {{"design", wheel}, {"actor", human}}, 404);
    p.call("POST", "/v1/runs/{id}/stop", rp + "/stop", nullptr, 200);
    p.call("POST", "/v1/runs/{id}/stop", "/v1/runs/r999999/stop", nullptr, 404);
    p.call("POST", "/v1/runs/{id}/inject", rp + "/inject", {{"design", wheel}, {"actor", human}}, 409);
    p.call("POST", "/v1/runs/{id}/advance", rp + "/advance", {{"generations", 1}}, 409);
    p.call("POST", "/v1/runs/{id}/resume", rp + "/resume", nullptr, 409);
    p.call("POST", "/v1/runs/{id}/stop", rp + "/stop", nullptr, 409);

    p.call("POST", "/v1/leaderboard/{challenge}", "/v1/leaderboard/move", {{"actor", human}, {"design", bar}}, 200);
    p.call("POST", "/v1/leaderboard/{challenge}", "/v1/leaderboard/move", {{"actor", 5}, {"design", bar}}, 400);
    p.call("POST", "/v1/leaderboard/{challenge}", "/v1/leaderboard/fly", {{"actor", human}, {"design", bar}}, 404);
    const Json board = p.call("GET", "/v1/leaderboard/{challenge}", "/v1/leaderboard/move", nullptr, 200);
    p.call("GET", "/v1/leaderboard/{challenge}", "/v1/leaderboard/fly", nullptr, 404);
    bool sorted = true;
    const Json entries = board.value("entries", Json::array());
    for (std::size_t i = 1; i < entries.size(); ++i) sorted = sorted && entries[i - 1]["score"] >= entries[i]["score"];

    p.call("GET", "", "/v1/unknown", nullptr, 404);
    p.call("POST", "", "/v1/evaluate", nullptr, 400);

    service.stop();
    server.join();

    store::Store reopened(tmp.path());
    for (const std::string& id : reopened.list_runs()) check_archive(reopened.load_run(id), "api run " + id);

    std::vector<std::string> missing;
    for (const Json& r : p.routes)
        if (!p.covered.count(r["method"].get<std::string>() + " " + r["path"].get<std::string>()))
            missing.push_back(r["method"].get<std::string>() + " " + r["path"].get<std::string>());
    for (const std::string& m : missing) p.problems.push_back("route not exercised: " + m);
    if (!four) p.problems.push_back("GET /v1/challenges did not list exactly the four challenges");
    if (!one_brick) p.problems.push_back("replay?upto=0 did not return one brick");
    if (!default_pop) p.problems.push_back("default run is not population 32 at generation 0");
    if (!plus_five) p.problems.push_back("advance 5 did not reach generation 5");
    if (!sorted) p.problems.push_back("leaderboard not sorted by score");

    std::string detail = fmt("%zu/%zu routes exercised, %d responses, challenges listed: %zu", p.covered.size(),
                             p.routes.size(), p.responses, ids.size());
    if (!p.problems.empty()) detail += "; first problem: " + p.problems.front() + fmt(" (%zu total)", p.problems.size());
    report.line(10, "api contract", p.problems.empty(), detail);
}

}  // namespace

int main() {
    Report report;
    const auto t0 = Clock::now();
    determinism(report);
    score_bounds(report);
    physics_oracles(report);
    replay_fidelity(report);
    elitism(report);
    fig1(report);
    fig3(report);
    injection(report);
    api_contract(report);
    std::string detail = fmt("%d runs re-checked", g_archive_runs);
    if (!g_archive_problems.empty()) detail += "; " + g_archive_problems.front();
    report.line(9, "archive soundness", g_archive_problems.empty() && g_archive_runs > 0, detail);
    std::printf("%s: %d criteria failed, %.1f s\n", report.failed ? "FAILED" : "ALL PASSED", report.failed, seconds_since(t0));
    return report.failed ? 1 : 0;
}
