#include "coevo/api.hpp"

#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <semaphore>
#include <thread>

#include "coevo/challenges.hpp"
#include "coevo/evolve.hpp"
#include "coevo/shape_json.hpp"
#include "coevo/store.hpp"

namespace coevo::api {

namespace fs = std::filesystem;
using challenges::ChallengeId;
using shape::ActorId;

namespace {

constexpr int kMaxAdvance = 10000;

struct HttpError {
    ApiError error;
};

[[noreturn]] void fail(std::string code, int status, std::string message, Json details = Json::object()) {
    throw HttpError{{std::move(code), std::move(message), status, std::move(details)}};
}

[[noreturn]] void bad_request(std::string message) { fail("invalid_request", 400, std::move(message)); }

Json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return Json::object();
    try {
        Json j = Json::parse(req.body);
        if (!j.is_object()) bad_request("request body must be a JSON object");
        return j;
    } catch (const Json::parse_error& e) {
        fail("invalid_json", 400, std::string("malformed JSON: ") + e.what());
    }
}

const Json& field(const Json& body, const char* key) {
    if (!body.contains(key)) bad_request(std::string("missing field '") + key + "'");
    return body[key];
}

std::string string_field(const Json& body, const char* key) {
    const Json& v = field(body, key);
    if (!v.is_string()) bad_request(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

std::optional<std::uint64_t> optional_seed(const Json& body) {
    if (!body.contains("seed") || body["seed"].is_null()) return std::nullopt;
    const Json& v = body["seed"];
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
        bad_request("field 'seed' must be a non-negative integer");
    return v.get<std::uint64_t>();
}

bool optional_bool(const Json& body, const char* key) {
    if (!body.contains(key)) return false;
    if (!body[key].is_boolean()) bad_request(std::string("field '") + key + "' must be a boolean");
    return body[key].get<bool>();
}

ActorId parse_actor(const Json& j) {
    try {
        return shape::actor_from_json(j);
    } catch (const Error& e) {
        bad_request(std::string("bad actor: ") + e.what());
    }
}

ChallengeId parse_challenge(const std::string& id) {
    try {
        return challenges::challenge_id_from_string(id);
    } catch (const Error&) {
        fail("unknown_challenge", 404, "unknown challenge '" + id + "'");
    }
}

// Brick size and anchor may be omitted; they take the usual defaults.
shape::BrickChain parse_design(const Json& j) {
    if (!j.is_object()) fail("invalid_design", 400, "design must be an object");
    try {
        return shape::chain_from_json(shape::with_design_defaults(j));
    } catch (const Error& e) {
        fail("invalid_design", 400, e.what(), {{"cause", to_string(e.code())}});
    }
}

shape::Action parse_action(const Json& j) {
    try {
        return shape::action_from_json(j);
    } catch (const Error& e) {
        fail("invalid_action", 400, e.what(), {{"cause", to_string(e.code())}});
    }
}

void send(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

Json spec_summary(const challenges::ChallengeSpec& spec) {
    return {{"id", challenges::to_string(spec.id)},
            {"version", spec.version},
            {"episode_steps", spec.episode_steps},
            {"design_dynamic", spec.design_dynamic}};
}

Json leaderboard_json(const std::string& challenge, const std::vector<store::LeaderboardEntry>& board) {
    Json entries = Json::array();
    for (std::size_t i = 0; i < board.size(); ++i) {
        Json e = store::leaderboard_entry_to_json(board[i]);
        e["rank"] = i + 1;
        entries.push_back(e);
    }
    return {{"challenge_id", challenge}, {"entries", entries}};
}

}  // namespace

const std::vector<std::string_view>& error_codes() {
    static const std::vector<std::string_view> codes{
        "invalid_json",   "invalid_request",  "invalid_design",  "invalid_action",     "invalid_params",
        "seq_out_of_range", "unknown_challenge", "unknown_session", "unknown_run",     "unknown_frames",
        "not_found",      "run_done",         "illegal_transition", "internal"};
    return codes;
}

ApiError to_api_error(const Error& e) {
    const auto make = [&](std::string code, int status) {
        ApiError out{std::move(code), e.what(), status, Json::object()};
        if (e.cause()) out.details["cause"] = to_string(*e.cause());
        return out;
    };
    switch (e.code()) {
    case ErrorCode::IndexOutOfRange:
    case ErrorCode::ChainFull:
    case ErrorCode::EmptyChain:
    case ErrorCode::UnquantizedAngle:
    case ErrorCode::BadBounds: return make("invalid_design", 400);
    case ErrorCode::InvalidAction: return make("invalid_action", 400);
    case ErrorCode::InvalidParams: return make("invalid_params", 400);
    case ErrorCode::SeqOutOfRange: return make("seq_out_of_range", 400);
    case ErrorCode::ParseError:
    case ErrorCode::InvalidLog: return make("invalid_request", 400);
    case ErrorCode::UnknownChallenge: return make("unknown_challenge", 404);
    case ErrorCode::UnknownSession: return make("unknown_session", 404);
    case ErrorCode::UnknownRun: return make("unknown_run", 404);
    case ErrorCode::RunDone: return make("run_done", 409);
    case ErrorCode::IllegalTransition: return make("illegal_transition", 409);
    case ErrorCode::InvalidSpec:
    case ErrorCode::DegenerateSpec:
    case ErrorCode::Unevaluated:
    case ErrorCode::IoError: return make("internal", 500);
    }
    return make("internal", 500);
}

Json api_error_to_json(const ApiError& e) {
    Json j{{"code", e.code}, {"message", e.message}, {"http_status", e.http_status}};
    if (!e.details.empty()) j["details"] = e.details;
    return j;
}

std::pair<std::string, int> parse_address(std::string_view address) {
    const std::size_t colon = address.rfind(':');
    if (colon == std::string_view::npos || colon == 0 || colon + 1 == address.size())
        throw Error(ErrorCode::ParseError, "address must be host:port");
    const std::string port_text(address.substr(colon + 1));
    if (port_text.find_first_not_of("0123456789") != std::string::npos || port_text.size() > 5)
        throw Error(ErrorCode::ParseError, "bad port '" + port_text + "'");
    const int port = std::stoi(port_text);
    if (port > 65535) throw Error(ErrorCode::ParseError, "bad port '" + port_text + "'");
    return {std::string(address.substr(0, colon)), port};
}

struct PendingInject {
    shape::BrickChain design;
    ActorId actor;
};

// One evolutionary run. `state` and the queues are guarded by `mutex`; the
// evaluator belongs to whoever holds `busy`.
struct RunSlot {
    std::mutex mutex;
    evolve::RunState state;
    std::unique_ptr<evolve::Evaluator> evaluator;
    int pending = 0;
    std::deque<PendingInject> injects;
    bool busy = false;
    std::thread worker;
};

struct Service::Impl {
    ServiceConfig config;
    store::Store store;
    httplib::Server server;
    unsigned eval_threads;
    std::counting_semaphore<1024> eval_slots;
    std::atomic<bool> shutting_down{false};

    std::mutex runs_mutex;
    std::map<std::string, std::unique_ptr<RunSlot>> runs;
    std::mutex idle_mutex;
    std::condition_variable idle_cv;

    explicit Impl(ServiceConfig c)
        : config(std::move(c)),
          store(config.data_dir),
          eval_threads(config.max_evaluations ? config.max_evaluations
                                              : std::max(1u, std::thread::hardware_concurrency())),
          eval_slots(static_cast<std::ptrdiff_t>(std::min(eval_threads, 1024u))) {
        routes();
    }

    ~Impl() {
        shutting_down = true;
        server.stop();
        std::vector<RunSlot*> slots;
        {
            std::lock_guard lock(runs_mutex);
            for (auto& [id, slot] : runs) slots.push_back(slot.get());
        }
        for (RunSlot* slot : slots)
            if (slot->worker.joinable()) slot->worker.join();
    }

    challenges::EpisodeResult evaluate(const challenges::ChallengeSpec& spec, const shape::BrickChain& design,
                                       std::uint64_t seed, bool frames) {
        eval_slots.acquire();
        struct Release {
            std::counting_semaphore<1024>& s;
            ~Release() { s.release(); }
        } release{eval_slots};
        challenges::RunOptions options;
        options.capture_frames = frames;
        challenges::EpisodeResult result = challenges::run_episode(spec, design, seed, options);
        if (frames) {
            const std::string id = "f" + sha256_hex(std::string(challenges::to_string(spec.id)) + "|" + spec.version + "|" +
                                                    result.design_hash + "|" + std::to_string(seed))
                                             .substr(0, 24);
            const fs::path dir = config.data_dir / "frames";
            fs::create_directories(dir);
            const fs::path path = dir / (id + ".jsonl");
            if (!fs::exists(path)) store::write_file_atomic(path, challenges::frames_to_jsonl(result.frames));
            result.frames_ref = "/v1/frames/" + id;
        }
        return result;
    }

    // Records a run's best design on the leaderboard under the default seed,
    // the same conditions humans are scored in.
    void post_run_best(const evolve::RunState& state) {
        if (!state.best_ever) return;
        const challenges::EpisodeResult r =
            evaluate(state.challenge, state.best_ever->genotype, challenges::kDefaultSeed, false);
        store.record_result(std::string(challenges::to_string(state.challenge.id)),
                            {shape::ActorKind::Agent, state.run_id}, r);
    }

    RunSlot& run_slot(const std::string& id) {
        std::lock_guard lock(runs_mutex);
        auto it = runs.find(id);
        if (it != runs.end()) return *it->second;
        evolve::RunState state = store.load_run(id);
        auto slot = std::make_unique<RunSlot>();
        slot->evaluator = std::make_unique<evolve::Evaluator>(state.challenge, state.eval_seed, eval_threads);
        slot->state = std::move(state);
        return *runs.emplace(id, std::move(slot)).first->second;
    }

    Json run_view(const RunSlot& slot) {
        Json j = evolve::run_state_to_json(slot.state);
        j.erase("rng_state");
        j.erase("format_version");
        j.erase("challenge");
        j["challenge_id"] = challenges::to_string(slot.state.challenge.id);
        j["pending_generations"] = slot.pending;
        j["queued_injections"] = slot.injects.size();
        j["busy"] = slot.busy;
        return j;
    }

    // Caller holds slot.mutex and owns the evaluator.
    void apply_injects(RunSlot& slot) {
        while (!slot.injects.empty()) {
            PendingInject p = std::move(slot.injects.front());
            slot.injects.pop_front();
            if (slot.state.status == evolve::RunStatus::Done) continue;
            slot.state = evolve::inject(slot.state, p.design, p.actor, *slot.evaluator);
        }
    }

    // Runs queued generations, then posts the run's best. Loops if more work
    // arrived meanwhile, so `busy` only drops when nothing is left to do.
    void work(RunSlot& slot) {
        std::unique_lock lock(slot.mutex);
        for (;;) {
            while (!shutting_down && slot.pending > 0 && slot.state.status == evolve::RunStatus::Running) {
                apply_injects(slot);
                evolve::RunState copy = slot.state;
                lock.unlock();
                std::optional<evolve::RunState> next;
                try {
                    next = evolve::next_generation(std::move(copy), *slot.evaluator);
                } catch (...) {
                }
                lock.lock();
                if (!next) {
                    slot.pending = 0;
                    break;
                }
                if (slot.state.status == evolve::RunStatus::Done) break;
                next->status = slot.state.status;
                slot.state = *std::move(next);
                --slot.pending;
                store.save_run(slot.state);
            }
            if (slot.state.status == evolve::RunStatus::Done) slot.pending = 0;
            apply_injects(slot);
            store.save_run(slot.state);
            const evolve::RunState snapshot = slot.state;
            lock.unlock();
            if (!shutting_down) post_run_best(snapshot);
            lock.lock();
            if (shutting_down || slot.pending == 0 || slot.state.status != evolve::RunStatus::Running) break;
        }
        slot.busy = false;
        lock.unlock();
        std::lock_guard idle(idle_mutex);
        idle_cv.notify_all();
    }

    // Caller holds slot.mutex.
    void start_worker(RunSlot& slot) {
        if (slot.busy || slot.pending == 0 || slot.state.status != evolve::RunStatus::Running) return;
        if (slot.worker.joinable()) slot.worker.join();
        slot.busy = true;
        slot.worker = std::thread([this, &slot] { work(slot); });
    }

    bool all_idle() {
        std::lock_guard lock(runs_mutex);
        for (auto& [id, slot] : runs) {
            std::lock_guard l(slot->mutex);
            if (slot->busy) return false;
        }
        return true;
    }

    void routes();
    void handle(const httplib::Request& req, httplib::Response& res,
                const std::function<void(const httplib::Request&, httplib::Response&)>& fn) {
        try {
            fn(req, res);
        } catch (const HttpError& e) {
            send(res, e.error.http_status, api_error_to_json(e.error));
        } catch (const Error& e) {
            const ApiError api = to_api_error(e);
            send(res, api.http_status, api_error_to_json(api));
        } catch (const std::exception& e) {
            send(res, 500, api_error_to_json({"internal", e.what(), 500, Json::object()}));
        }
    }
};

void Service::Impl::routes() {
    using Req = const httplib::Request&;
    using Res = httplib::Response&;
    const auto get = [this](const std::string& pattern, std::function<void(Req, Res)> fn) {
        server.Get(pattern, [this, fn](Req req, Res res) { handle(req, res, fn); });
    };
    const auto post = [this](const std::string& pattern, std::function<void(Req, Res)> fn) {
        server.Post(pattern, [this, fn](Req req, Res res) { handle(req, res, fn); });
    };

    get("/v1/challenges", [](Req, Res res) {
        Json list = Json::array();
        for (ChallengeId id : challenges::kAllChallenges) list.push_back(spec_summary(challenges::default_spec(id)));
        send(res, 200, {{"challenges", list}});
    });

    get("/v1/challenges/:id", [](Req req, Res res) {
        send(res, 200, challenges::spec_to_json(challenges::default_spec(parse_challenge(req.path_params.at("id")))));
    });

    post("/v1/evaluate", [this](Req req, Res res) {
        const Json body = parse_body(req);
        const ChallengeId id = parse_challenge(string_field(body, "challenge_id"));
        const shape::BrickChain design = parse_design(field(body, "design"));
        const std::uint64_t seed = optional_seed(body).value_or(challenges::kDefaultSeed);
        const challenges::EpisodeResult r =
            evaluate(challenges::default_spec(id), design, seed, optional_bool(body, "frames"));
        send(res, 200, challenges::result_to_json(r));
    });

    get("/v1/frames/:id", [this](Req req, Res res) {
        const std::string id = req.path_params.at("id");
        const fs::path path = config.data_dir / "frames" / (id + ".jsonl");
        const bool safe = !id.empty() && id[0] == 'f' && id.size() <= 64 && id.find_first_not_of("0123456789abcdef", 1) == std::string::npos;
        if (!safe || !fs::exists(path)) fail("unknown_frames", 404, "unknown frames '" + id + "'");
        Json frames = Json::array();
        for (const challenges::Frame& f : challenges::frames_from_jsonl(store::read_file(path)))
            frames.push_back(challenges::frame_to_json(f));
        send(res, 200, {{"frames_id", id}, {"frames", frames}});
    });

    post("/v1/sessions", [this](Req req, Res res) {
        const Json body = parse_body(req);
        const ActorId actor = parse_actor(field(body, "actor"));
        const ChallengeId id = parse_challenge(string_field(body, "challenge_id"));
        const store::SessionRecord r = store.create_session(actor, std::string(challenges::to_string(id)));
        send(res, 201,
             {{"session_id", r.session_id}, {"actor", shape::actor_to_json(r.actor)}, {"challenge_id", r.challenge_id}});
    });

    get("/v1/sessions", [this](Req, Res res) { send(res, 200, {{"sessions", store.list_sessions()}}); });

    get("/v1/sessions/:id", [this](Req req, Res res) {
        const store::SessionRecord r = store.get_session(req.path_params.at("id"));
        send(res, 200,
             {{"session_id", r.session_id},
              {"actor", shape::actor_to_json(r.actor)},
              {"challenge_id", r.challenge_id},
              {"chain", shape::design_to_json(r.final_design)},
              {"entry_count", r.log.entries.size()},
              {"best_result", r.best_result ? challenges::result_to_json(*r.best_result) : Json(nullptr)},
              {"created_at", r.created_at},
              {"updated_at", r.updated_at}});
    });

    post("/v1/sessions/:id/actions", [this](Req req, Res res) {
        const std::string id = req.path_params.at("id");
        const Json body = parse_body(req);
        const shape::Action action = parse_action(field(body, "action"));
        const ActorId actor = body.contains("actor") ? parse_actor(body["actor"]) : store.get_session(id).actor;
        const store::AppendResult r = store.append_action(id, action, actor);
        send(res, 200, {{"seq", r.seq}, {"chain", shape::design_to_json(r.chain)}});
    });

    get("/v1/sessions/:id/replay", [this](Req req, Res res) {
        std::optional<std::uint64_t> upto;
        if (req.has_param("upto")) {
            const std::string text = req.get_param_value("upto");
            if (text.empty() || text.size() > 19 || text.find_first_not_of("0123456789") != std::string::npos)
                bad_request("'upto' must be a non-negative integer");
            upto = std::stoull(text);
        }
        const store::Replay r = store.get_replay(req.path_params.at("id"), upto);
        send(res, 200, {{"log", shape::log_to_json(r.log)}, {"chain", shape::design_to_json(r.chain)}});
    });

    post("/v1/sessions/:id/evaluate", [this](Req req, Res res) {
        const std::string id = req.path_params.at("id");
        const Json body = parse_body(req);
        const store::SessionRecord s = store.get_session(id);
        if (!s.final_design) fail("invalid_design", 400, "session chain is empty", {{"cause", "EmptyChain"}});
        const std::uint64_t seed = optional_seed(body).value_or(challenges::kDefaultSeed);
        const challenges::ChallengeSpec& spec = challenges::default_spec(parse_challenge(s.challenge_id));
        const challenges::EpisodeResult r = evaluate(spec, *s.final_design, seed, optional_bool(body, "frames"));
        store.record_session_result(id, r);
        Json out = challenges::result_to_json(r);
        if (seed == challenges::kDefaultSeed) out["leaderboard_rank"] = store.record_result(s.challenge_id, s.actor, r);
        send(res, 200, out);
    });

    post("/v1/runs", [this](Req req, Res res) {
        const Json body = parse_body(req);
        const ChallengeId cid = parse_challenge(string_field(body, "challenge_id"));
        evolve::EvoParams params;
        if (body.contains("params")) params = evolve::params_from_json(body["params"]);
        // A fixed seed, not entropy, when the client leaves it out.
        if (!params.master_seed) params.master_seed = 0;
        evolve::validate(params);
        const std::string run_id = store.new_run_id();
        auto slot = std::make_unique<RunSlot>();
        slot->evaluator = std::make_unique<evolve::Evaluator>(challenges::default_spec(cid),
                                                              mix_seed(*params.master_seed), eval_threads);
        slot->state = evolve::init_run(challenges::default_spec(cid), params, *slot->evaluator, run_id);
        store.save_run(slot->state);
        post_run_best(slot->state);
        {
            std::lock_guard lock(runs_mutex);
            runs.emplace(run_id, std::move(slot));
        }
        send(res, 201, {{"run_id", run_id}});
    });

    get("/v1/runs", [this](Req, Res res) { send(res, 200, {{"runs", store.list_runs()}}); });

    get("/v1/runs/:id", [this](Req req, Res res) {
        RunSlot& slot = run_slot(req.path_params.at("id"));
        std::lock_guard lock(slot.mutex);
        send(res, 200, run_view(slot));
    });

    get("/v1/runs/:id/archive", [this](Req req, Res res) {
        RunSlot& slot = run_slot(req.path_params.at("id"));
        std::lock_guard lock(slot.mutex);
        const Json view = run_view(slot);
        send(res, 200, {{"run_id", slot.state.run_id}, {"archive", view["archive"]}});
    });

    post("/v1/runs/:id/advance", [this](Req req, Res res) {
        RunSlot& slot = run_slot(req.path_params.at("id"));
        const Json body = parse_body(req);
        const Json& g = field(body, "generations");
        if (!g.is_number_integer() || g.get<long long>() < 1 || g.get<long long>() > kMaxAdvance)
            bad_request("'generations' must be an integer in [1, " + std::to_string(kMaxAdvance) + "]");
        std::lock_guard lock(slot.mutex);
        if (slot.state.status == evolve::RunStatus::Done) fail("run_done", 409, "run is done");
        slot.pending += g.get<int>();
        start_worker(slot);
        send(res, 202, {{"run_id", slot.state.run_id}, {"generation", slot.state.generation},
                        {"pending_generations", slot.pending}, {"status", evolve::to_string(slot.state.status)}});
    });

    const auto control = [this](evolve::RunCommand command) {
        return [this, command](Req req, Res res) {
            RunSlot& slot = run_slot(req.path_params.at("id"));
            std::lock_guard lock(slot.mutex);
            slot.state = evolve::run_control(slot.state, command);
            if (slot.state.status == evolve::RunStatus::Done) {
                slot.pending = 0;
                slot.injects.clear();
            }
            store.save_run(slot.state);
            start_worker(slot);
            send(res, 200, {{"run_id", slot.state.run_id}, {"status", evolve::to_string(slot.state.status)},
                            {"generation", slot.state.generation}});
        };
    };
    post("/v1/runs/:id/pause", control(evolve::RunCommand::Pause));
    post("/v1/runs/:id/resume", control(evolve::RunCommand::Resume));
    post("/v1/runs/:id/stop", control(evolve::RunCommand::Stop));

    post("/v1/runs/:id/inject", [this](Req req, Res res) {
        RunSlot& slot = run_slot(req.path_params.at("id"));
        const Json body = parse_body(req);
        const shape::BrickChain design = parse_design(field(body, "design"));
        const ActorId actor = parse_actor(field(body, "actor"));
        std::unique_lock lock(slot.mutex);
        if (slot.state.status == evolve::RunStatus::Done) fail("run_done", 409, "run is done");
        if (slot.busy) {
            slot.injects.push_back({design, actor});
            send(res, 202, {{"run_id", slot.state.run_id}, {"queued", true}, {"generation", slot.state.generation}});
            return;
        }
        slot.state = evolve::inject(slot.state, design, actor, *slot.evaluator);
        store.save_run(slot.state);
        const evolve::RunState snapshot = slot.state;
        const std::string hash = shape::design_hash(evolve::normalized(design));
        Json individual;
        for (const evolve::Individual& ind : snapshot.population)
            if (ind.origin == evolve::Origin::Injected && ind.design_hash == hash && ind.actor == actor)
                individual = {{"design_hash", ind.design_hash}, {"fitness", *ind.fitness}};
        lock.unlock();
        post_run_best(snapshot);
        send(res, 200, {{"run_id", snapshot.run_id}, {"queued", false}, {"generation", snapshot.generation},
                        {"injected", individual}, {"best_fitness", *snapshot.best_ever->fitness}});
    });

    get("/v1/leaderboard/:challenge", [this](Req req, Res res) {
        const std::string cid(challenges::to_string(parse_challenge(req.path_params.at("challenge"))));
        send(res, 200, leaderboard_json(cid, store.leaderboard(cid)));
    });

    post("/v1/leaderboard/:challenge", [this](Req req, Res res) {
        const ChallengeId id = parse_challenge(req.path_params.at("challenge"));
        const Json body = parse_body(req);
        const ActorId actor = parse_actor(field(body, "actor"));
        const shape::BrickChain design = parse_design(field(body, "design"));
        const challenges::EpisodeResult r =
            evaluate(challenges::default_spec(id), design, challenges::kDefaultSeed, false);
        const std::string cid(challenges::to_string(id));
        const int rank = store.record_result(cid, actor, r);
        send(res, 200, {{"rank", rank}, {"result", challenges::result_to_json(r)}});
    });

    if (config.static_dir) server.set_mount_point("/app", config.static_dir->string());

    server.set_error_handler([](Req req, Res res) {
        if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
        const ApiError e = res.status == 404 ? ApiError{"not_found", "no route for " + req.method + " " + req.path, 404, Json::object()}
                                             : ApiError{"invalid_request", "request rejected", 400, Json::object()};
        send(res, e.http_status, api_error_to_json(e));
        return httplib::Server::HandlerResponse::Handled;
    });
    server.set_exception_handler([](Req, Res res, std::exception_ptr) {
        send(res, 500, api_error_to_json({"internal", "unhandled exception", 500, Json::object()}));
    });
}

Service::Service(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

Service::~Service() = default;

int Service::bind() {
    const ServiceConfig& c = impl_->config;
    const int port = c.port == 0 ? impl_->server.bind_to_any_port(c.host) : impl_->server.bind_to_port(c.host, c.port) ? c.port : -1;
    if (port <= 0) throw Error(ErrorCode::IoError, "cannot listen on " + c.host + ":" + std::to_string(c.port));
    return port;
}

void Service::run() { impl_->server.listen_after_bind(); }

void Service::stop() { impl_->server.stop(); }

void Service::wait_idle() {
    std::unique_lock lock(impl_->idle_mutex);
    impl_->idle_cv.wait(lock, [this] { return impl_->all_idle(); });
}

}  // namespace coevo::api
