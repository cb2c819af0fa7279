#pragma once

// Flat-file persistence under one data directory:
//
//   sessions/<id>.jsonl      header line, then one action-log entry per line
//   sessions/<id>.meta.json  committed entry count, current chain, best result
//   runs/<id>.json           RunState
//   leaderboard.json
//   index.json               session directory
//
// The meta file is the commit point of an append: it is replaced by rename
// after the log line is on disk, and on open any log lines past its
// entry_count are discarded.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "coevo/challenges.hpp"
#include "coevo/evolve.hpp"
#include "coevo/json_util.hpp"
#include "coevo/shape.hpp"

namespace coevo::store {

using shape::ActorId;

inline constexpr int kStoreFormatVersion = 1;

// Milliseconds since the Unix epoch.
using Clock = std::function<std::int64_t()>;
std::int64_t system_clock_ms();

struct SessionRecord {
    std::string session_id;
    ActorId actor;
    std::string challenge_id;
    shape::ActionLog log;
    shape::Design final_design;
    std::optional<challenges::EpisodeResult> best_result;
    std::int64_t created_at = 0;
    std::int64_t updated_at = 0;
};

Json session_to_json(const SessionRecord& record);
SessionRecord session_from_json(const Json& j);

struct LeaderboardEntry {
    std::string challenge_id;
    ActorId actor;
    double score = 0.0;
    std::string design_hash;
    std::int64_t recorded_at = 0;
    // Insertion order; breaks recorded_at ties.
    std::uint64_t seq = 0;
    bool operator==(const LeaderboardEntry&) const = default;
};

Json leaderboard_entry_to_json(const LeaderboardEntry& entry);
LeaderboardEntry leaderboard_entry_from_json(const Json& j);

struct Replay {
    shape::ActionLog log;
    shape::Design chain;
};

struct AppendResult {
    std::uint64_t seq = 0;
    shape::Design chain;
};

// Stages at which a test can simulate a crash by throwing from the hook.
enum class CrashPoint { LogAppended, MetaTempWritten };

class Store {
public:
    explicit Store(std::filesystem::path data_dir, Clock clock = system_clock_ms);

    const std::filesystem::path& data_dir() const { return dir_; }

    SessionRecord create_session(const ActorId& actor, const std::string& challenge_id);
    // Throws UnknownSession, InvalidAction (cause = the apply_action error).
    AppendResult append_action(const std::string& session_id, const shape::Action& action, const ActorId& actor);
    // Throws UnknownSession.
    SessionRecord get_session(const std::string& session_id);
    // Throws UnknownSession, SeqOutOfRange.
    Replay get_replay(const std::string& session_id, std::optional<std::uint64_t> upto_seq = {});
    std::vector<std::string> list_sessions();
    // Keeps the higher-scoring result. Throws UnknownSession, and InvalidAction
    // when the result's design is not reachable by any prefix of the log.
    SessionRecord record_session_result(const std::string& session_id, const challenges::EpisodeResult& result);

    // Keeps the per-(challenge, actor) maximum; returns the actor's 1-based
    // rank. Throws ParseError for a score outside [0, 1].
    int record_result(const std::string& challenge_id, const ActorId& actor, const challenges::EpisodeResult& result);
    // Score descending, then recorded_at, then seq.
    std::vector<LeaderboardEntry> leaderboard(const std::string& challenge_id);

    std::string new_run_id();
    void save_run(const evolve::RunState& state);
    // Throws UnknownRun.
    evolve::RunState load_run(const std::string& run_id);
    std::vector<std::string> list_runs();

    void set_crash_hook(std::function<void(CrashPoint)> hook) { crash_hook_ = std::move(hook); }

private:
    struct SessionSlot {
        std::mutex mutex;
        std::optional<SessionRecord> cached;
    };

    std::filesystem::path session_log_path(const std::string& id) const;
    std::filesystem::path session_meta_path(const std::string& id) const;
    SessionSlot& slot(const std::string& id);
    SessionRecord& load_locked(const std::string& id, SessionSlot& s);
    void write_meta(const SessionRecord& record);
    std::vector<LeaderboardEntry> read_leaderboard(std::uint64_t& next_seq);

    std::filesystem::path dir_;
    Clock clock_;
    std::function<void(CrashPoint)> crash_hook_;

    std::mutex sessions_mutex_;
    std::map<std::string, std::unique_ptr<SessionSlot>> slots_;
    std::mutex index_mutex_;
    std::mutex leaderboard_mutex_;
    std::mutex runs_mutex_;
    std::uint64_t next_run_ = 0;
};

// Writes `bytes` to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace coevo::store
