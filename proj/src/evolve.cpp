#include "coevo/evolve.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <numeric>
#include <thread>

#include "coevo/error.hpp"
#include "coevo/shape_json.hpp"

namespace coevo::evolve {

namespace {

[[noreturn]] void bad_params(const std::string& msg) { throw Error(ErrorCode::InvalidParams, msg); }

void require_not_done(const RunState& state) {
    if (state.status == RunStatus::Done) throw Error(ErrorCode::RunDone, "run '" + state.run_id + "' is done");
}

Individual make_individual(BrickChain genotype, Origin origin, std::uint64_t eval_seed) {
    Individual ind{std::move(genotype), std::nullopt, origin, eval_seed, {}, {}};
    ind.design_hash = shape::design_hash(ind.genotype);
    return ind;
}

// Fitter first; ties keep the lower index first.
std::vector<std::size_t> ranking(std::span<const Individual> population) {
    std::vector<std::size_t> order(population.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return *population[a].fitness > *population[b].fitness;
    });
    return order;
}

HistoryRow summarize(const RunState& state) {
    HistoryRow row{state.generation, 0.0, 0.0};
    double sum = 0.0;
    bool first = true;
    for (const Individual& ind : state.population) {
        const double f = *ind.fitness;
        row.best = first ? f : std::max(row.best, f);
        first = false;
        sum += f;
    }
    row.mean = state.population.empty() ? 0.0 : sum / static_cast<double>(state.population.size());
    return row;
}

void consider(RunState& state, const Individual& ind) {
    if (!state.best_ever || *ind.fitness > *state.best_ever->fitness) state.best_ever = ind;
    state = archive_update(std::move(state), ind);
}

void evaluate_missing(std::vector<Individual>& individuals, Evaluator& evaluator) {
    std::vector<std::size_t> todo;
    std::vector<BrickChain> chains;
    for (std::size_t i = 0; i < individuals.size(); ++i) {
        if (individuals[i].fitness) continue;
        todo.push_back(i);
        chains.push_back(individuals[i].genotype);
    }
    const std::vector<double> scores = evaluator.evaluate_all(chains);
    for (std::size_t k = 0; k < todo.size(); ++k) individuals[todo[k]].fitness = scores[k];
}

Json individual_to_json(const Individual& ind) {
    Json j{{"genotype", shape::design_to_json(ind.genotype)},
           {"fitness", ind.fitness ? Json(*ind.fitness) : Json(nullptr)},
           {"origin", to_string(ind.origin)},
           {"eval_seed", ind.eval_seed},
           {"design_hash", ind.design_hash}};
    if (ind.actor) j["actor"] = shape::actor_to_json(*ind.actor);
    return j;
}

Individual individual_from_json(const Json& j) {
    Individual ind{shape::chain_from_json(require(j, "genotype")), std::nullopt,
                   origin_from_string(require_string(j, "origin")), 0, require_string(j, "design_hash"), {}};
    const Json& f = require(j, "fitness");
    if (!f.is_null()) ind.fitness = require_number(j, "fitness");
    ind.eval_seed = require(j, "eval_seed").get<std::uint64_t>();
    if (j.contains("actor")) ind.actor = shape::actor_from_json(j["actor"]);
    return ind;
}

template <typename T>
void read_opt(const Json& j, std::string_view key, T& out) {
    if (!j.contains(key)) return;
    const Json& v = j[std::string(key)];
    if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw Error(ErrorCode::InvalidParams, "'" + std::string(key) + "' must be a number");
        out = v.get<double>();
    } else {
        if (!v.is_number_integer()) throw Error(ErrorCode::InvalidParams, "'" + std::string(key) + "' must be an integer");
        if constexpr (std::is_unsigned_v<T>) {
            if (v.get<long long>() < 0) throw Error(ErrorCode::InvalidParams, "'" + std::string(key) + "' must be >= 0");
        }
        out = v.get<T>();
    }
}

}  // namespace

std::string_view to_string(Origin origin) {
    switch (origin) {
    case Origin::Random: return "random";
    case Origin::Mutation: return "mutation";
    case Origin::Crossover: return "crossover";
    case Origin::Injected: return "injected";
    }
    return "random";
}

Origin origin_from_string(std::string_view s) {
    for (Origin o : {Origin::Random, Origin::Mutation, Origin::Crossover, Origin::Injected})
        if (to_string(o) == s) return o;
    throw Error(ErrorCode::ParseError, "unknown origin '" + std::string(s) + "'");
}

std::string_view to_string(RunStatus status) {
    switch (status) {
    case RunStatus::Running: return "running";
    case RunStatus::Paused: return "paused";
    case RunStatus::Done: return "done";
    }
    return "running";
}

RunStatus run_status_from_string(std::string_view s) {
    for (RunStatus st : {RunStatus::Running, RunStatus::Paused, RunStatus::Done})
        if (to_string(st) == s) return st;
    throw Error(ErrorCode::ParseError, "unknown run status '" + std::string(s) + "'");
}

void validate(const EvoParams& p) {
    if (p.population_size < 2) bad_params("population_size must be at least 2");
    if (p.elite_count < 1 || p.elite_count >= p.population_size)
        bad_params("elite_count must be in [1, population_size)");
    if (p.tournament_k < 1) bad_params("tournament_k must be positive");
    if (!(p.p_crossover >= 0.0 && p.p_crossover <= 1.0)) bad_params("p_crossover must be in [0, 1]");
    const MutationWeights& w = p.mutation_weights;
    if (!(w.add >= 0.0 && w.remove >= 0.0 && w.rotate >= 0.0)) bad_params("mutation weights must be non-negative");
    if (!(w.add + w.remove + w.rotate > 0.0)) bad_params("mutation weights must not all be zero");
    if (p.mutations_min < 0 || p.mutations_max < p.mutations_min) bad_params("bad mutations_per_child range");
    if (!(p.archive_score_min >= 0.0 && p.archive_score_min <= 1.0)) bad_params("archive_score_min must be in [0, 1]");
    if (!(p.archive_distance_min >= 0.0)) bad_params("archive_distance_min must be non-negative");
    if (!p.master_seed) bad_params("master_seed is required");
    if (p.init_min_len < 1 || p.init_max_len < p.init_min_len || p.init_max_len > static_cast<int>(shape::kMaxBricks))
        bad_params("bad initial length range");
}

Json params_to_json(const EvoParams& p) {
    return {{"population_size", p.population_size},
            {"tournament_k", p.tournament_k},
            {"elite_count", p.elite_count},
            {"p_crossover", p.p_crossover},
            {"mutation_weights", {{"add", p.mutation_weights.add}, {"remove", p.mutation_weights.remove}, {"rotate", p.mutation_weights.rotate}}},
            {"mutations_per_child", Json::array({p.mutations_min, p.mutations_max})},
            {"archive_score_min", p.archive_score_min},
            {"archive_distance_min", p.archive_distance_min},
            {"master_seed", p.master_seed ? Json(*p.master_seed) : Json(nullptr)},
            {"init_length", Json::array({p.init_min_len, p.init_max_len})},
            {"eval_threads", p.eval_threads}};
}

EvoParams params_from_json(const Json& j) {
    if (!j.is_object()) throw Error(ErrorCode::InvalidParams, "params must be an object");
    EvoParams p;
    read_opt(j, "population_size", p.population_size);
    read_opt(j, "tournament_k", p.tournament_k);
    read_opt(j, "elite_count", p.elite_count);
    read_opt(j, "p_crossover", p.p_crossover);
    read_opt(j, "archive_score_min", p.archive_score_min);
    read_opt(j, "archive_distance_min", p.archive_distance_min);
    read_opt(j, "eval_threads", p.eval_threads);
    if (j.contains("mutation_weights")) {
        const Json& w = j["mutation_weights"];
        if (!w.is_object()) throw Error(ErrorCode::InvalidParams, "mutation_weights must be an object");
        read_opt(w, "add", p.mutation_weights.add);
        read_opt(w, "remove", p.mutation_weights.remove);
        read_opt(w, "rotate", p.mutation_weights.rotate);
    }
    const auto read_range = [&](std::string_view key, int& lo, int& hi) {
        if (!j.contains(key)) return;
        const Json& r = j[std::string(key)];
        if (!r.is_array() || r.size() != 2 || !r[0].is_number_integer() || !r[1].is_number_integer())
            throw Error(ErrorCode::InvalidParams, "'" + std::string(key) + "' must be [min, max]");
        lo = r[0].get<int>();
        hi = r[1].get<int>();
    };
    read_range("mutations_per_child", p.mutations_min, p.mutations_max);
    read_range("init_length", p.init_min_len, p.init_max_len);
    if (j.contains("master_seed") && !j["master_seed"].is_null()) {
        std::uint64_t seed = 0;
        read_opt(j, "master_seed", seed);
        p.master_seed = seed;
    }
    return p;
}

Json run_state_to_json(const RunState& s) {
    Json population = Json::array();
    for (const Individual& ind : s.population) population.push_back(individual_to_json(ind));
    Json archive = Json::array();
    for (const Individual& ind : s.archive) archive.push_back(individual_to_json(ind));
    Json history = Json::array();
    for (const HistoryRow& row : s.history)
        history.push_back({{"generation", row.generation}, {"best", row.best}, {"mean", row.mean}});
    return {{"format_version", kRunFormatVersion},
            {"run_id", s.run_id},
            {"challenge", challenges::spec_to_json(s.challenge)},
            {"params", params_to_json(s.params)},
            {"generation", s.generation},
            {"population", population},
            {"best_ever", s.best_ever ? individual_to_json(*s.best_ever) : Json(nullptr)},
            {"archive", archive},
            {"rng_state", s.rng.state_hex()},
            {"status", to_string(s.status)},
            {"history", history},
            {"eval_seed", s.eval_seed}};
}

RunState run_state_from_json(const Json& j) {
    if (require_integer(j, "format_version") != kRunFormatVersion)
        throw Error(ErrorCode::ParseError, "unsupported run format_version");
    RunState s{require_string(j, "run_id"),
               challenges::spec_from_json(require(j, "challenge")),
               params_from_json(require(j, "params")),
               static_cast<int>(require_integer(j, "generation")),
               {},
               std::nullopt,
               {},
               Rng::from_state_hex(require_string(j, "rng_state")),
               run_status_from_string(require_string(j, "status")),
               {},
               require(j, "eval_seed").get<std::uint64_t>()};
    if (const Json& b = require(j, "best_ever"); !b.is_null()) s.best_ever = individual_from_json(b);
    for (const Json& ind : require(j, "population")) s.population.push_back(individual_from_json(ind));
    for (const Json& ind : require(j, "archive")) s.archive.push_back(individual_from_json(ind));
    for (const Json& row : require(j, "history"))
        s.history.push_back({static_cast<int>(require_integer(row, "generation")), require_number(row, "best"),
                             require_number(row, "mean")});
    return s;
}

std::string history_csv(const RunState& state) {
    std::string out = "generation,best,mean\n";
    char line[96];
    for (const HistoryRow& row : state.history) {
        std::snprintf(line, sizeof line, "%d,%.9g,%.9g\n", row.generation, row.best, row.mean);
        out += line;
    }
    return out;
}

Evaluator::Evaluator(ChallengeSpec spec, std::uint64_t seed, unsigned threads)
    : spec_(std::move(spec)), seed_(seed), threads_(threads) {
    challenges::validate(spec_);
    if (threads_ == 0) threads_ = std::max(1u, std::thread::hardware_concurrency());
}

double Evaluator::evaluate(const BrickChain& chain) {
    return evaluate_all(std::span<const BrickChain>(&chain, 1)).front();
}

std::vector<double> Evaluator::evaluate_all(std::span<const BrickChain> chains) {
    std::vector<double> out(chains.size());
    std::vector<std::string> hashes(chains.size());
    std::vector<std::size_t> todo;
    std::map<std::string, std::size_t> first_of;
    for (std::size_t i = 0; i < chains.size(); ++i) {
        hashes[i] = shape::design_hash(chains[i]);
        if (cache_.contains(hashes[i]) || first_of.contains(hashes[i])) continue;
        first_of[hashes[i]] = i;
        todo.push_back(i);
    }

    std::vector<double> fresh(todo.size());
    std::vector<std::exception_ptr> errors(todo.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t k = next++; k < todo.size(); k = next++) {
            try {
                fresh[k] = challenges::run_episode(spec_, chains[todo[k]], seed_).score;
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    const unsigned n_threads = std::min<unsigned>(threads_, static_cast<unsigned>(todo.size()));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    for (std::size_t k = 0; k < todo.size(); ++k) {
        if (errors[k]) std::rethrow_exception(errors[k]);
        cache_[hashes[todo[k]]] = fresh[k];
    }
    episodes_run_ += todo.size();
    for (std::size_t i = 0; i < chains.size(); ++i) out[i] = cache_.at(hashes[i]);
    return out;
}

Evaluator make_evaluator(const RunState& state) {
    return Evaluator(state.challenge, state.eval_seed, state.params.eval_threads);
}

BrickChain normalized(const BrickChain& chain) {
    return BrickChain({}, {chain.bricks().begin(), chain.bricks().end()}, chain.brick_length(), chain.brick_thickness());
}

std::optional<shape::Action> random_mutation(Rng& rng, const BrickChain& chain, const MutationWeights& weights) {
    const double add = chain.size() < shape::kMaxBricks ? weights.add : 0.0;
    const double remove = chain.size() > 1 ? weights.remove : 0.0;
    const double rotate = weights.rotate;
    const double total = add + remove + rotate;
    if (!(total > 0.0)) return std::nullopt;
    const double u = rng.uniform01() * total;
    const auto end = [&] { return rng.below(2) == 0 ? shape::ChainEnd::Head : shape::ChainEnd::Tail; };
    if (u < add) {
        const shape::ChainEnd e = end();
        return shape::AddBrick{e, shape::random_angle(rng)};
    }
    if (u < add + remove) return shape::RemoveBrick{end()};
    const auto index = static_cast<std::size_t>(rng.below(chain.size()));
    return shape::RotateBrick{index, shape::random_angle(rng)};
}

BrickChain crossover(const BrickChain& a, const BrickChain& b, std::size_t cut) {
    if (cut < 1 || cut > std::min(a.size(), b.size())) throw Error(ErrorCode::IndexOutOfRange, "crossover cut out of range");
    std::vector<shape::Brick> bricks(a.bricks().begin(), a.bricks().begin() + static_cast<std::ptrdiff_t>(cut));
    bricks.insert(bricks.end(), b.bricks().begin() + static_cast<std::ptrdiff_t>(cut), b.bricks().end());
    if (bricks.size() > shape::kMaxBricks) bricks.resize(shape::kMaxBricks);
    return BrickChain({}, std::move(bricks), a.brick_length(), a.brick_thickness());
}

std::size_t tournament_select(Rng& rng, std::span<const Individual> population, int k) {
    std::size_t best = population.size();
    for (int i = 0; i < k; ++i) {
        const auto idx = static_cast<std::size_t>(rng.below(population.size()));
        if (best == population.size() || *population[idx].fitness > *population[best].fitness ||
            (*population[idx].fitness == *population[best].fitness && idx < best))
            best = idx;
    }
    return best;
}

RunState init_run(const ChallengeSpec& challenge, const EvoParams& params, Evaluator& evaluator, std::string run_id) {
    validate(params);
    challenges::validate(challenge);
    RunState s;
    s.run_id = std::move(run_id);
    s.challenge = challenge;
    s.params = params;
    s.rng = Rng(*params.master_seed);
    s.eval_seed = mix_seed(*params.master_seed);
    if (evaluator.seed() != s.eval_seed)
        throw Error(ErrorCode::InvalidParams, "evaluator seed does not match the run's evaluation seed");
    for (int i = 0; i < params.population_size; ++i) {
        const BrickChain c = shape::random_chain(s.rng, static_cast<std::size_t>(params.init_min_len),
                                                 static_cast<std::size_t>(params.init_max_len));
        s.population.push_back(make_individual(c, Origin::Random, s.eval_seed));
    }
    evaluate_missing(s.population, evaluator);
    for (const Individual& ind : s.population) consider(s, ind);
    s.history.push_back(summarize(s));
    return s;
}

RunState init_run(const ChallengeSpec& challenge, const EvoParams& params, std::string run_id) {
    validate(params);
    Evaluator evaluator(challenge, mix_seed(*params.master_seed), params.eval_threads);
    return init_run(challenge, params, evaluator, std::move(run_id));
}

RunState next_generation(RunState s, Evaluator& evaluator) {
    require_not_done(s);
    const EvoParams& p = s.params;
    const std::vector<std::size_t> order = ranking(s.population);

    std::vector<Individual> next;
    next.reserve(s.population.size());
    for (int e = 0; e < p.elite_count; ++e) next.push_back(s.population[order[static_cast<std::size_t>(e)]]);

    while (next.size() < s.population.size()) {
        BrickChain child = s.population.front().genotype;
        Origin origin = Origin::Mutation;
        if (s.rng.uniform01() < p.p_crossover) {
            const BrickChain& a = s.population[tournament_select(s.rng, s.population, p.tournament_k)].genotype;
            const BrickChain& b = s.population[tournament_select(s.rng, s.population, p.tournament_k)].genotype;
            const int shorter = static_cast<int>(std::min(a.size(), b.size()));
            child = crossover(a, b, static_cast<std::size_t>(s.rng.uniform_int(1, shorter)));
            origin = Origin::Crossover;
        } else {
            child = s.population[tournament_select(s.rng, s.population, p.tournament_k)].genotype;
        }
        const int mutations = s.rng.uniform_int(p.mutations_min, p.mutations_max);
        shape::Design d = child;
        for (int m = 0; m < mutations; ++m) {
            const auto action = random_mutation(s.rng, *d, p.mutation_weights);
            if (!action) break;
            d = shape::apply_action(d, *action);
        }
        next.push_back(make_individual(normalized(*d), origin, s.eval_seed));
    }
    evaluate_missing(next, evaluator);

    s.population = std::move(next);
    s.generation += 1;
    for (std::size_t i = static_cast<std::size_t>(p.elite_count); i < s.population.size(); ++i)
        consider(s, s.population[i]);
    s.history.push_back(summarize(s));
    return s;
}

RunState next_generation(RunState state) {
    Evaluator evaluator = make_evaluator(state);
    return next_generation(std::move(state), evaluator);
}

RunState inject(RunState s, const shape::Design& design, const ActorId& actor, Evaluator& evaluator) {
    if (!design) throw Error(ErrorCode::EmptyChain, "cannot inject an empty design");
    require_not_done(s);
    Individual ind = make_individual(normalized(*design), Origin::Injected, s.eval_seed);
    ind.actor = actor;
    ind.fitness = evaluator.evaluate(ind.genotype);

    std::size_t worst = 0;
    for (std::size_t i = 1; i < s.population.size(); ++i)
        if (*s.population[i].fitness <= *s.population[worst].fitness) worst = i;
    s.population[worst] = ind;
    consider(s, ind);
    if (!s.history.empty() && s.history.back().generation == s.generation) s.history.back() = summarize(s);
    return s;
}

RunState inject(RunState state, const shape::Design& design, const ActorId& actor) {
    Evaluator evaluator = make_evaluator(state);
    return inject(std::move(state), design, actor, evaluator);
}

RunState archive_update(RunState s, const Individual& candidate) {
    if (!candidate.fitness) throw Error(ErrorCode::Unevaluated, "candidate has no fitness");
    if (*candidate.fitness < s.params.archive_score_min) return s;
    std::vector<std::size_t> close;
    for (std::size_t i = 0; i < s.archive.size(); ++i)
        if (shape::genotype_distance(candidate.genotype, s.archive[i].genotype) < s.params.archive_distance_min)
            close.push_back(i);
    if (close.empty()) {
        s.archive.push_back(candidate);
    } else if (close.size() == 1 && *candidate.fitness > *s.archive[close[0]].fitness) {
        s.archive[close[0]] = candidate;
    }
    return s;
}

RunState run_control(RunState s, RunCommand command) {
    const auto illegal = [&](std::string_view what) -> RunState {
        throw Error(ErrorCode::IllegalTransition,
                    std::string(what) + " is not allowed while the run is " + std::string(to_string(s.status)));
    };
    switch (command) {
    case RunCommand::Pause:
        if (s.status != RunStatus::Running) return illegal("pause");
        s.status = RunStatus::Paused;
        break;
    case RunCommand::Resume:
        if (s.status != RunStatus::Paused) return illegal("resume");
        s.status = RunStatus::Running;
        break;
    case RunCommand::Stop:
        if (s.status == RunStatus::Done) return illegal("stop");
        s.status = RunStatus::Done;
        break;
    }
    return s;
}

}  // namespace coevo::evolve
