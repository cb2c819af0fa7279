// coevo: evaluate designs, run evolution, replay sessions, export galleries
// and launch the HTTP service.
//
// Exit codes: 0 success, 2 usage or input error, 1 internal error.

#include <CLI11.hpp>

#include <algorithm>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <thread>

#include "coevo/api.hpp"
#include "coevo/challenges.hpp"
#include "coevo/evolve.hpp"
#include "coevo/shape_json.hpp"
#include "coevo/store.hpp"
#include "svg.hpp"

namespace fs = std::filesystem;

namespace coevo::cli {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitInput = 2;

// Raised for bad input that has no library error code.
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string data_dir = "coevo-data";
    std::string format = "human";

    fs::path resolved_data_dir() const {
        if (const char* env = std::getenv("COEVO_DATA_DIR"); env && *env) return env;
        return data_dir;
    }
};

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

Json read_json_file(const fs::path& path) {
    if (!fs::is_regular_file(path)) throw InputError("cannot read '" + path.string() + "'");
    Json j = Json::parse(store::read_file(path), nullptr, false);
    if (j.is_discarded()) throw InputError("'" + path.string() + "' is not valid JSON");
    return j;
}

shape::BrickChain read_design(const fs::path& path) {
    return shape::chain_from_json(shape::with_design_defaults(read_json_file(path)));
}

void write_output(const fs::path& path, const std::string& bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    store::write_file_atomic(path, bytes);
}

// ---- eval

struct EvalArgs {
    std::string challenge;
    std::string design;
    std::uint64_t seed = 0;
    std::string frames;
};

int cmd_eval(const Common& common, const EvalArgs& a) {
    const challenges::ChallengeSpec& spec = challenges::default_spec(challenges::challenge_id_from_string(a.challenge));
    const shape::BrickChain design = read_design(a.design);
    const challenges::EpisodeResult r = challenges::run_episode(spec, design, a.seed, {!a.frames.empty(), 2});
    if (!a.frames.empty()) write_output(a.frames, challenges::frames_to_jsonl(r.frames));

    if (common.format == "json") {
        std::cout << challenges::result_to_json(r).dump(2) << "\n";
    } else if (common.format == "csv") {
        std::cout << "score,seed,design_hash\n" << fmt(r.score) << "," << r.seed << "," << r.design_hash << "\n";
    } else {
        std::cout << "score: " << fmt(r.score) << "\n";
        for (const auto& [name, value] : r.metrics) std::cout << "  " << name << ": " << fmt(value) << "\n";
    }
    return kExitOk;
}

// ---- evolve

struct EvolveArgs {
    std::string challenge;
    int pop = 0;
    int gens = 0;
    std::uint64_t seed = 0;
    std::string out;
    std::vector<std::string> injects;
};

// "design.json@gen" -> (path, gen).
std::pair<fs::path, int> parse_inject(const std::string& text, int gens) {
    const auto at = text.rfind('@');
    if (at == std::string::npos || at == 0 || at + 1 == text.size())
        throw InputError("--inject expects design.json@generation, got '" + text + "'");
    const std::string gen_text = text.substr(at + 1);
    if (gen_text.size() > 9 || gen_text.find_first_not_of("0123456789") != std::string::npos)
        throw InputError("bad generation in --inject '" + text + "'");
    const int gen = std::stoi(gen_text);
    if (gen > gens) throw InputError("--inject generation " + gen_text + " is past --gens");
    return {text.substr(0, at), gen};
}

int cmd_evolve(const Common& common, const EvolveArgs& a) {
    const challenges::ChallengeSpec& spec = challenges::default_spec(challenges::challenge_id_from_string(a.challenge));
    if (a.gens < 0) throw InputError("--gens must be non-negative");
    evolve::EvoParams params;
    params.population_size = a.pop;
    params.master_seed = a.seed;
    evolve::validate(params);

    std::multimap<int, shape::BrickChain> injects;
    for (const std::string& text : a.injects) {
        const auto [path, gen] = parse_inject(text, a.gens);
        injects.emplace(gen, read_design(path));
    }

    store::Store store(common.resolved_data_dir());
    evolve::RunState state = evolve::init_run(spec, params, store.new_run_id());
    evolve::Evaluator evaluator = evolve::make_evaluator(state);
    const shape::ActorId cli_actor{shape::ActorKind::Human, "cli"};
    const auto apply_injects = [&] {
        const auto [first, last] = injects.equal_range(state.generation);
        for (auto it = first; it != last; ++it) state = evolve::inject(std::move(state), it->second, cli_actor, evaluator);
    };
    apply_injects();
    while (state.generation < a.gens) {
        state = evolve::next_generation(std::move(state), evaluator);
        apply_injects();
    }
    state = evolve::run_control(std::move(state), evolve::RunCommand::Stop);
    store.save_run(state);
    const Json state_json = evolve::run_state_to_json(state);
    if (!a.out.empty()) write_output(a.out, state_json.dump(2) + "\n");

    if (common.format == "json") {
        Json out{{"run_id", state.run_id},
                 {"challenge_id", std::string(challenges::to_string(spec.id))},
                 {"generation", state.generation},
                 {"history", state_json["history"]},
                 {"best_ever", state_json["best_ever"]},
                 {"archive_size", state.archive.size()}};
        std::cout << out.dump(2) << "\n";
    } else {
        std::cout << evolve::history_csv(state);
    }
    if (common.format == "human")
        std::cerr << "run " << state.run_id << " saved under " << common.resolved_data_dir().string() << "\n";
    return kExitOk;
}

// ---- replay

struct ReplayArgs {
    std::string session;
    std::optional<std::uint64_t> upto;
    std::string svg;
};

int cmd_replay(const Common& common, const ReplayArgs& a) {
    store::Store store(common.resolved_data_dir());
    const store::Replay r = store.get_replay(a.session, a.upto);
    if (!a.svg.empty()) {
        if (!r.chain) throw InputError("the replayed chain is empty; nothing to render");
        write_output(a.svg, chain_svg(*r.chain, a.session));
    }
    if (common.format == "json") {
        std::cout << Json{{"log", shape::log_to_json(r.log)}, {"chain", shape::design_to_json(r.chain)}}.dump(2) << "\n";
    } else if (common.format == "csv") {
        std::cout << "index,angle\n";
        if (r.chain)
            for (std::size_t i = 0; i < r.chain->size(); ++i) std::cout << i << "," << fmt(r.chain->bricks()[i].rel_angle.radians()) << "\n";
    } else {
        std::cout << "entries: " << r.log.entries.size() << "\n";
        std::cout << "bricks: " << (r.chain ? r.chain->size() : 0) << "\n";
        std::cout << "angles:";
        if (r.chain)
            for (std::size_t i = 0; i < r.chain->size(); ++i) std::cout << " " << fmt(r.chain->bricks()[i].rel_angle.radians());
        std::cout << "\n";
    }
    return kExitOk;
}

// ---- gallery

struct GalleryArgs {
    std::string run;
    int top = 0;
    std::string svg_dir;
};

evolve::RunState load_run(const Common& common, const std::string& ref) {
    if (fs::is_regular_file(ref)) return evolve::run_state_from_json(read_json_file(ref));
    store::Store store(common.resolved_data_dir());
    return store.load_run(ref);
}

int cmd_gallery(const Common& common, const GalleryArgs& a) {
    if (a.top < 1) throw InputError("--top must be at least 1");
    const evolve::RunState state = load_run(common, a.run);

    // Archive and population, best first, one entry per design.
    std::vector<const evolve::Individual*> pool;
    for (const auto& ind : state.archive) pool.push_back(&ind);
    for (const auto& ind : state.population)
        if (ind.fitness) pool.push_back(&ind);
    std::stable_sort(pool.begin(), pool.end(), [](auto* x, auto* y) { return *x->fitness > *y->fitness; });
    std::set<std::string> seen;
    std::vector<const evolve::Individual*> picked;
    for (auto* ind : pool)
        if (static_cast<int>(picked.size()) < a.top && seen.insert(ind->design_hash).second) picked.push_back(ind);

    fs::create_directories(a.svg_dir);
    Json files = Json::array();
    for (std::size_t i = 0; i < picked.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof name, "%02zu-%.12s.svg", i + 1, picked[i]->design_hash.c_str());
        const fs::path path = fs::path(a.svg_dir) / name;
        write_output(path, chain_svg(picked[i]->genotype, "score " + fmt(*picked[i]->fitness)));
        files.push_back({{"path", path.string()}, {"fitness", *picked[i]->fitness}, {"design_hash", picked[i]->design_hash}});
    }
    if (common.format == "json") {
        std::cout << Json{{"run_id", state.run_id}, {"files", files}}.dump(2) << "\n";
    } else if (common.format == "csv") {
        std::cout << "path,fitness,design_hash\n";
        for (const Json& f : files)
            std::cout << f["path"].get<std::string>() << "," << fmt(f["fitness"]) << "," << f["design_hash"].get<std::string>() << "\n";
    } else {
        for (const Json& f : files) std::cout << f["path"].get<std::string>() << "  " << fmt(f["fitness"]) << "\n";
    }
    if (static_cast<int>(picked.size()) < a.top)
        std::cerr << "only " << picked.size() << " distinct evaluated designs in the run\n";
    return kExitOk;
}

// ---- serve

int cmd_serve(const Common& common, const std::string& addr) {
    const auto [host, port] = api::parse_address(addr);
    api::ServiceConfig config;
    config.data_dir = common.resolved_data_dir();
    config.host = host;
    config.port = port;

    // Signals are taken synchronously by a dedicated thread; stop() is not
    // async-signal-safe.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    api::Service service(config);
    const int bound = service.bind();
    std::cout << "listening on http://" << host << ":" << bound << std::endl;
    std::thread waiter([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        service.stop();
    });
    service.run();
    // run() also returns if the listener fails; release the waiter.
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"coevo: brick-chain design challenges, evolution and sessions"};
    app.require_subcommand(1);
    Common common;
    app.add_option("--data-dir", common.data_dir, "Data directory (COEVO_DATA_DIR overrides)");
    app.add_option("--format", common.format, "Output format")->check(CLI::IsMember({"human", "json", "csv"}));

    EvalArgs eval;
    CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a design file on a challenge");
    eval_cmd->add_option("--challenge", eval.challenge)->required();
    eval_cmd->add_option("--design", eval.design)->required();
    eval_cmd->add_option("--seed", eval.seed)->required();
    eval_cmd->add_option("--frames", eval.frames, "Write frames as JSON lines");

    EvolveArgs evo;
    CLI::App* evolve_cmd = app.add_subcommand("evolve", "Run evolution and print the history as CSV");
    evolve_cmd->add_option("--challenge", evo.challenge)->required();
    evolve_cmd->add_option("--pop", evo.pop)->required();
    evolve_cmd->add_option("--gens", evo.gens)->required();
    evolve_cmd->add_option("--seed", evo.seed)->required();
    evolve_cmd->add_option("--out", evo.out, "Also write the final run state here");
    evolve_cmd->add_option("--inject", evo.injects, "design.json@generation; repeatable");

    ReplayArgs rep;
    std::uint64_t upto = 0;
    CLI::App* replay_cmd = app.add_subcommand("replay", "Print a session's chain");
    replay_cmd->add_option("--session", rep.session)->required();
    CLI::Option* upto_opt = replay_cmd->add_option("--upto", upto, "Last sequence number to apply");
    replay_cmd->add_option("--svg", rep.svg);

    GalleryArgs gal;
    CLI::App* gallery_cmd = app.add_subcommand("gallery", "Write the best designs of a run as SVG");
    gallery_cmd->add_option("--run", gal.run, "Run state file or run id")->required();
    gallery_cmd->add_option("--top", gal.top)->required();
    gallery_cmd->add_option("--svg-dir", gal.svg_dir)->required();

    std::string addr = "127.0.0.1:8711";
    CLI::App* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
    serve_cmd->add_option("--addr", addr, "host:port");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (*eval_cmd) return cmd_eval(common, eval);
        if (*evolve_cmd) return cmd_evolve(common, evo);
        if (*replay_cmd) {
            if (*upto_opt) rep.upto = upto;
            return cmd_replay(common, rep);
        }
        if (*gallery_cmd) return cmd_gallery(common, gal);
        if (*serve_cmd) return cmd_serve(common, addr);
    } catch (const Error& e) {
        // Library errors all trace back to arguments, files or stored data.
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitInternal;
}

}  // namespace coevo::cli

int main(int argc, char** argv) { return coevo::cli::main(argc, argv); }
