#include "coevo/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "coevo/error.hpp"
#include "coevo/shape_json.hpp"

namespace coevo::store {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void io_error(const fs::path& path, const std::string& what) {
    throw Error(ErrorCode::IoError, what + " '" + path.string() + "': " + std::strerror(errno));
}

void write_all(int fd, std::string_view bytes, const fs::path& path) {
    while (!bytes.empty()) {
        const ssize_t n = ::write(fd, bytes.data(), bytes.size());
        if (n < 0) {
            if (errno == EINTR) continue;
            ::close(fd);
            io_error(path, "cannot write");
        }
        bytes.remove_prefix(static_cast<std::size_t>(n));
    }
}

void write_synced(const fs::path& path, std::string_view bytes, int flags) {
    const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | flags, 0644);
    if (fd < 0) io_error(path, "cannot open");
    write_all(fd, bytes, path);
    if (::fsync(fd) != 0) {
        ::close(fd);
        io_error(path, "cannot sync");
    }
    ::close(fd);
}

fs::path temp_sibling(const fs::path& path) { return fs::path(path.string() + ".tmp"); }

void rename_over(const fs::path& from, const fs::path& to) {
    std::error_code ec;
    fs::rename(from, to, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot rename '" + from.string() + "': " + ec.message());
}

// Ids become file names, so only a conservative alphabet is accepted.
bool safe_id(std::string_view id) {
    if (id.empty() || id.size() > 64) return false;
    return std::all_of(id.begin(), id.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_';
    });
}

std::string numbered_id(char prefix, std::uint64_t n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%c%06llu", prefix, static_cast<unsigned long long>(n));
    return buf;
}

Json meta_to_json(const SessionRecord& r) {
    Json j = session_to_json(r);
    j.erase("log");
    j["entry_count"] = r.log.entries.size();
    return j;
}

void check_version(const Json& j, const fs::path& path) {
    if (!j.is_object() || !j.contains("format_version") || j["format_version"] != kStoreFormatVersion)
        throw Error(ErrorCode::ParseError, "unsupported format_version in '" + path.string() + "'");
}

bool by_rank(const LeaderboardEntry& a, const LeaderboardEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.recorded_at != b.recorded_at) return a.recorded_at < b.recorded_at;
    return a.seq < b.seq;
}

}  // namespace

std::int64_t system_clock_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

void write_file_atomic(const fs::path& path, std::string_view bytes) {
    const fs::path tmp = temp_sibling(path);
    write_synced(tmp, bytes, O_TRUNC);
    rename_over(tmp, path);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read '" + path.string() + "'");
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

Json session_to_json(const SessionRecord& r) {
    return {{"format_version", kStoreFormatVersion},
            {"session_id", r.session_id},
            {"actor", shape::actor_to_json(r.actor)},
            {"challenge_id", r.challenge_id},
            {"log", shape::log_to_json(r.log)},
            {"final_design", shape::design_to_json(r.final_design)},
            {"best_result", r.best_result ? challenges::result_to_json(*r.best_result) : Json(nullptr)},
            {"created_at", r.created_at},
            {"updated_at", r.updated_at}};
}

SessionRecord session_from_json(const Json& j) {
    if (require_integer(j, "format_version") != kStoreFormatVersion)
        throw Error(ErrorCode::ParseError, "unsupported session format_version");
    SessionRecord r;
    r.session_id = require_string(j, "session_id");
    r.actor = shape::actor_from_json(require(j, "actor"));
    r.challenge_id = require_string(j, "challenge_id");
    if (j.contains("log")) r.log = shape::log_from_json(j["log"]);
    r.final_design = shape::design_from_json(require(j, "final_design"));
    if (const Json& b = require(j, "best_result"); !b.is_null()) r.best_result = challenges::result_from_json(b);
    r.created_at = require_integer(j, "created_at");
    r.updated_at = require_integer(j, "updated_at");
    return r;
}

Json leaderboard_entry_to_json(const LeaderboardEntry& e) {
    return {{"challenge_id", e.challenge_id}, {"actor", shape::actor_to_json(e.actor)},
            {"score", e.score},               {"design_hash", e.design_hash},
            {"recorded_at", e.recorded_at},   {"seq", e.seq}};
}

LeaderboardEntry leaderboard_entry_from_json(const Json& j) {
    return {require_string(j, "challenge_id"),
            shape::actor_from_json(require(j, "actor")),
            require_number(j, "score"),
            require_string(j, "design_hash"),
            require_integer(j, "recorded_at"),
            static_cast<std::uint64_t>(require_integer(j, "seq"))};
}

Store::Store(fs::path data_dir, Clock clock) : dir_(std::move(data_dir)), clock_(std::move(clock)) {
    std::error_code ec;
    fs::create_directories(dir_ / "sessions", ec);
    if (!ec) fs::create_directories(dir_ / "runs", ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create data directory '" + dir_.string() + "': " + ec.message());
}

fs::path Store::session_log_path(const std::string& id) const { return dir_ / "sessions" / (id + ".jsonl"); }
fs::path Store::session_meta_path(const std::string& id) const { return dir_ / "sessions" / (id + ".meta.json"); }

Store::SessionSlot& Store::slot(const std::string& id) {
    std::lock_guard lock(sessions_mutex_);
    auto& p = slots_[id];
    if (!p) p = std::make_unique<SessionSlot>();
    return *p;
}

SessionRecord& Store::load_locked(const std::string& id, SessionSlot& s) {
    if (s.cached) return *s.cached;
    const fs::path meta_path = session_meta_path(id);
    if (!safe_id(id) || !fs::exists(meta_path)) throw Error(ErrorCode::UnknownSession, "unknown session '" + id + "'");

    const Json meta = parse_json(read_file(meta_path));
    check_version(meta, meta_path);
    SessionRecord r = session_from_json(meta);
    const auto committed = static_cast<std::size_t>(require_integer(meta, "entry_count"));

    // Header line, then entries. Anything past the committed count is the
    // residue of an interrupted append.
    const fs::path log_path = session_log_path(id);
    const std::string text = read_file(log_path);
    std::size_t pos = 0;
    std::size_t lines = 0;
    r.log = {id, r.challenge_id, {}};
    while (lines < committed + 1) {
        const std::size_t nl = text.find('\n', pos);
        if (nl == std::string::npos) throw Error(ErrorCode::IoError, "session log '" + log_path.string() + "' is short");
        const Json line = parse_json(std::string_view(text).substr(pos, nl - pos));
        if (lines == 0)
            check_version(line, log_path);
        else
            r.log.entries.push_back(shape::log_entry_from_json(line));
        pos = nl + 1;
        ++lines;
    }
    if (pos < text.size()) fs::resize_file(log_path, pos);
    if (shape::replay(r.log) != r.final_design)
        throw Error(ErrorCode::IoError, "session '" + id + "' log does not replay to its stored chain");
    s.cached = std::move(r);
    return *s.cached;
}

void Store::write_meta(const SessionRecord& record) {
    const fs::path path = session_meta_path(record.session_id);
    const fs::path tmp = temp_sibling(path);
    write_synced(tmp, meta_to_json(record).dump(), O_TRUNC);
    if (crash_hook_) crash_hook_(CrashPoint::MetaTempWritten);
    rename_over(tmp, path);
}

SessionRecord Store::create_session(const ActorId& actor, const std::string& challenge_id) {
    std::lock_guard lock(index_mutex_);
    const fs::path index_path = dir_ / "index.json";
    Json index{{"format_version", kStoreFormatVersion}, {"sessions", Json::array()}};
    if (fs::exists(index_path)) {
        index = parse_json(read_file(index_path));
        check_version(index, index_path);
    }
    std::uint64_t n = index["sessions"].size() + 1;
    while (fs::exists(session_meta_path(numbered_id('s', n)))) ++n;

    SessionRecord r;
    r.session_id = numbered_id('s', n);
    r.actor = actor;
    r.challenge_id = challenge_id;
    r.log = {r.session_id, challenge_id, {}};
    r.created_at = r.updated_at = clock_();

    const Json header{{"format_version", kStoreFormatVersion}, {"session_id", r.session_id}, {"challenge_id", challenge_id}};
    write_file_atomic(session_log_path(r.session_id), header.dump() + "\n");
    write_file_atomic(session_meta_path(r.session_id), meta_to_json(r).dump());
    index["sessions"].push_back({{"session_id", r.session_id},
                                 {"challenge_id", challenge_id},
                                 {"actor", shape::actor_to_json(actor)},
                                 {"created_at", r.created_at}});
    write_file_atomic(index_path, index.dump(2));
    return r;
}

AppendResult Store::append_action(const std::string& session_id, const shape::Action& action, const ActorId& actor) {
    SessionSlot& s = slot(session_id);
    std::lock_guard lock(s.mutex);
    const SessionRecord& current = load_locked(session_id, s);

    shape::Design next;
    try {
        next = shape::apply_action(current.final_design, action);
    } catch (const Error& e) {
        throw Error(ErrorCode::InvalidAction, std::string(to_string(e.code())) + ": " + e.what(), e.code());
    }

    SessionRecord updated = current;
    const std::uint64_t seq = updated.log.append(actor, action);
    updated.final_design = next;
    updated.updated_at = clock_();
    try {
        write_synced(session_log_path(session_id), shape::log_entry_to_json(updated.log.entries.back()).dump() + "\n",
                     O_APPEND);
        if (crash_hook_) crash_hook_(CrashPoint::LogAppended);
        write_meta(updated);
    } catch (...) {
        // Reload on next access so the uncommitted line is trimmed.
        s.cached.reset();
        throw;
    }
    s.cached = std::move(updated);
    return {seq, next};
}

SessionRecord Store::get_session(const std::string& session_id) {
    SessionSlot& s = slot(session_id);
    std::lock_guard lock(s.mutex);
    return load_locked(session_id, s);
}

Replay Store::get_replay(const std::string& session_id, std::optional<std::uint64_t> upto_seq) {
    const SessionRecord r = get_session(session_id);
    if (!upto_seq) return {r.log, r.final_design};
    if (r.log.entries.empty() || *upto_seq > r.log.entries.back().seq)
        throw Error(ErrorCode::SeqOutOfRange, "seq " + std::to_string(*upto_seq) + " is past the end of the log");
    shape::ActionLog prefix{r.log.session_id, r.log.challenge_id, {}};
    for (const shape::LogEntry& e : r.log.entries)
        if (e.seq <= *upto_seq) prefix.entries.push_back(e);
    return {prefix, shape::replay(prefix)};
}

std::vector<std::string> Store::list_sessions() {
    std::lock_guard lock(index_mutex_);
    std::vector<std::string> ids;
    const fs::path index_path = dir_ / "index.json";
    if (!fs::exists(index_path)) return ids;
    const Json index = parse_json(read_file(index_path));
    check_version(index, index_path);
    for (const Json& e : index["sessions"]) ids.push_back(require_string(e, "session_id"));
    return ids;
}

SessionRecord Store::record_session_result(const std::string& session_id, const challenges::EpisodeResult& result) {
    SessionSlot& s = slot(session_id);
    std::lock_guard lock(s.mutex);
    const SessionRecord& current = load_locked(session_id, s);

    bool reachable = false;
    shape::Design d;
    for (std::size_t i = 0; i < current.log.entries.size() && !reachable; ++i) {
        d = shape::apply_action(d, current.log.entries[i].action);
        reachable = d && shape::design_hash(*d) == result.design_hash;
    }
    if (!reachable)
        throw Error(ErrorCode::InvalidAction, "result design is not reachable from session '" + session_id + "'");
    if (current.best_result && current.best_result->score >= result.score) return current;

    SessionRecord updated = current;
    updated.best_result = result;
    updated.best_result->frames.clear();
    updated.updated_at = clock_();
    try {
        write_meta(updated);
    } catch (...) {
        s.cached.reset();
        throw;
    }
    s.cached = updated;
    return updated;
}

std::vector<LeaderboardEntry> Store::read_leaderboard(std::uint64_t& next_seq) {
    const fs::path path = dir_ / "leaderboard.json";
    std::vector<LeaderboardEntry> entries;
    next_seq = 0;
    if (!fs::exists(path)) return entries;
    const Json j = parse_json(read_file(path));
    check_version(j, path);
    next_seq = static_cast<std::uint64_t>(require_integer(j, "next_seq"));
    for (const Json& e : require(j, "entries")) entries.push_back(leaderboard_entry_from_json(e));
    return entries;
}

int Store::record_result(const std::string& challenge_id, const ActorId& actor, const challenges::EpisodeResult& result) {
    if (!(result.score >= 0.0 && result.score <= 1.0))
        throw Error(ErrorCode::ParseError, "score must be in [0, 1]");
    std::lock_guard lock(leaderboard_mutex_);
    std::uint64_t next_seq = 0;
    std::vector<LeaderboardEntry> entries = read_leaderboard(next_seq);

    auto it = std::find_if(entries.begin(), entries.end(),
                           [&](const LeaderboardEntry& e) { return e.challenge_id == challenge_id && e.actor == actor; });
    const LeaderboardEntry fresh{challenge_id, actor, result.score, result.design_hash, clock_(), next_seq};
    bool changed = true;
    if (it == entries.end())
        entries.push_back(fresh);
    else if (result.score > it->score)
        *it = fresh;
    else
        changed = false;

    if (changed) {
        Json list = Json::array();
        for (const LeaderboardEntry& e : entries) list.push_back(leaderboard_entry_to_json(e));
        write_file_atomic(dir_ / "leaderboard.json",
                          Json{{"format_version", kStoreFormatVersion}, {"next_seq", next_seq + 1}, {"entries", list}}.dump(2));
    }

    std::vector<LeaderboardEntry> board;
    for (const LeaderboardEntry& e : entries)
        if (e.challenge_id == challenge_id) board.push_back(e);
    std::sort(board.begin(), board.end(), by_rank);
    const auto pos = std::find_if(board.begin(), board.end(), [&](const LeaderboardEntry& e) { return e.actor == actor; });
    return static_cast<int>(pos - board.begin()) + 1;
}

std::vector<LeaderboardEntry> Store::leaderboard(const std::string& challenge_id) {
    std::lock_guard lock(leaderboard_mutex_);
    std::uint64_t next_seq = 0;
    std::vector<LeaderboardEntry> board;
    for (LeaderboardEntry& e : read_leaderboard(next_seq))
        if (e.challenge_id == challenge_id) board.push_back(std::move(e));
    std::sort(board.begin(), board.end(), by_rank);
    return board;
}

std::string Store::new_run_id() {
    std::lock_guard lock(runs_mutex_);
    if (next_run_ == 0) {
        next_run_ = 1;
        for (const auto& entry : fs::directory_iterator(dir_ / "runs")) {
            const std::string stem = entry.path().stem().string();
            if (entry.path().extension() == ".json" && stem.size() > 1 && stem[0] == 'r' &&
                stem.find_first_not_of("0123456789", 1) == std::string::npos)
                next_run_ = std::max<std::uint64_t>(next_run_, std::stoull(stem.substr(1)) + 1);
        }
    }
    return numbered_id('r', next_run_++);
}

void Store::save_run(const evolve::RunState& state) {
    if (!safe_id(state.run_id)) throw Error(ErrorCode::UnknownRun, "invalid run id '" + state.run_id + "'");
    const std::string bytes = evolve::run_state_to_json(state).dump();
    std::lock_guard lock(runs_mutex_);
    write_file_atomic(dir_ / "runs" / (state.run_id + ".json"), bytes);
}

evolve::RunState Store::load_run(const std::string& run_id) {
    const fs::path path = dir_ / "runs" / (run_id + ".json");
    std::string bytes;
    {
        std::lock_guard lock(runs_mutex_);
        if (!safe_id(run_id) || !fs::exists(path)) throw Error(ErrorCode::UnknownRun, "unknown run '" + run_id + "'");
        bytes = read_file(path);
    }
    return evolve::run_state_from_json(parse_json(bytes));
}

std::vector<std::string> Store::list_runs() {
    std::lock_guard lock(runs_mutex_);
    std::vector<std::string> ids;
    for (const auto& entry : fs::directory_iterator(dir_ / "runs"))
        if (entry.path().extension() == ".json") ids.push_back(entry.path().stem().string());
    std::sort(ids.begin(), ids.end());
    return ids;
}

}  // namespace coevo::store
