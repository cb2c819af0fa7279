#pragma once

// Generational genetic algorithm over brick chains. Mutations are drawn from
// the same action vocabulary human designers use.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coevo/challenges.hpp"
#include "coevo/json_util.hpp"
#include "coevo/rng.hpp"
#include "coevo/shape.hpp"

namespace coevo::evolve {

using challenges::ChallengeSpec;
using shape::ActorId;
using shape::BrickChain;

enum class Origin { Random, Mutation, Crossover, Injected };
std::string_view to_string(Origin origin);
Origin origin_from_string(std::string_view s);

struct Individual {
    BrickChain genotype;
    std::optional<double> fitness;
    Origin origin = Origin::Random;
    std::uint64_t eval_seed = 0;
    std::string design_hash;
    // Set for injected individuals.
    std::optional<ActorId> actor;
};

struct MutationWeights {
    double add = 1.0;
    double remove = 1.0;
    double rotate = 1.0;
};

struct EvoParams {
    int population_size = 32;
    int tournament_k = 3;
    int elite_count = 1;
    double p_crossover = 0.5;
    MutationWeights mutation_weights;
    int mutations_min = 1;
    int mutations_max = 3;
    double archive_score_min = 0.5;
    double archive_distance_min = 1.0;
    // Required; there is no implicit entropy source.
    std::optional<std::uint64_t> master_seed;
    // Initial chain lengths.
    int init_min_len = 1;
    int init_max_len = 8;
    // Worker threads for evaluation; 0 means one per processor.
    unsigned eval_threads = 0;
};

// Throws InvalidParams.
void validate(const EvoParams& params);

Json params_to_json(const EvoParams& params);
// Missing fields take their defaults.
EvoParams params_from_json(const Json& j);

enum class RunStatus { Running, Paused, Done };
std::string_view to_string(RunStatus status);
RunStatus run_status_from_string(std::string_view s);

struct HistoryRow {
    int generation = 0;
    double best = 0.0;
    double mean = 0.0;
    bool operator==(const HistoryRow&) const = default;
};

struct RunState {
    std::string run_id;
    ChallengeSpec challenge;
    EvoParams params;
    int generation = 0;
    std::vector<Individual> population;
    // Set once any individual has been evaluated.
    std::optional<Individual> best_ever;
    std::vector<Individual> archive;
    Rng rng;
    RunStatus status = RunStatus::Running;
    std::vector<HistoryRow> history;
    // Shared by every evaluation in the run.
    std::uint64_t eval_seed = 0;
};

inline constexpr int kRunFormatVersion = 1;

Json run_state_to_json(const RunState& state);
RunState run_state_from_json(const Json& j);

// History as CSV with header generation,best,mean.
std::string history_csv(const RunState& state);

/// Memoized, optionally parallel episode evaluation for one (spec, seed).
/// Results are merged by index, so the thread count never changes outcomes.
class Evaluator {
public:
    Evaluator(ChallengeSpec spec, std::uint64_t seed, unsigned threads = 0);

    double evaluate(const BrickChain& chain);
    std::vector<double> evaluate_all(std::span<const BrickChain> chains);

    std::size_t episodes_run() const { return episodes_run_; }
    const ChallengeSpec& spec() const { return spec_; }
    std::uint64_t seed() const { return seed_; }

private:
    ChallengeSpec spec_;
    std::uint64_t seed_;
    unsigned threads_;
    std::map<std::string, double> cache_;
    std::size_t episodes_run_ = 0;
};

Evaluator make_evaluator(const RunState& state);

RunState init_run(const ChallengeSpec& challenge, const EvoParams& params, std::string run_id = {});
RunState init_run(const ChallengeSpec& challenge, const EvoParams& params, Evaluator& evaluator,
                  std::string run_id = {});

// Throws RunDone.
RunState next_generation(RunState state);
RunState next_generation(RunState state, Evaluator& evaluator);

// Evaluates `design` and puts it in place of the worst individual. Does not
// draw from the run's generator. Throws EmptyChain, RunDone.
RunState inject(RunState state, const shape::Design& design, const ActorId& actor);
RunState inject(RunState state, const shape::Design& design, const ActorId& actor, Evaluator& evaluator);

// Throws Unevaluated.
RunState archive_update(RunState state, const Individual& candidate);

enum class RunCommand { Pause, Resume, Stop };
// Throws IllegalTransition.
RunState run_control(RunState state, RunCommand command);

// One random legal edit, drawn by `weights` among the kinds legal for `chain`.
// nullopt when no kind with positive weight is legal.
std::optional<shape::Action> random_mutation(Rng& rng, const BrickChain& chain, const MutationWeights& weights);

// Prefix of `a` up to `cut`, then the suffix of `b` from `cut`, clamped to the
// brick limit. Requires 1 <= cut <= min(a.size(), b.size()).
BrickChain crossover(const BrickChain& a, const BrickChain& b, std::size_t cut);

// Index of the best of `k` uniform draws; ties go to the lower index.
std::size_t tournament_select(Rng& rng, std::span<const Individual> population, int k);

// Same angles with the anchor moved to the origin.
BrickChain normalized(const BrickChain& chain);

}  // namespace coevo::evolve
