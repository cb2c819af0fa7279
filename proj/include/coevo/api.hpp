#pragma once

// HTTP/JSON service under /v1. Routes:
//
//   GET  /v1/challenges                     GET  /v1/challenges/{id}
//   POST /v1/evaluate                       GET  /v1/frames/{id}
//   POST /v1/sessions                       GET  /v1/sessions
//   GET  /v1/sessions/{id}                  POST /v1/sessions/{id}/actions
//   GET  /v1/sessions/{id}/replay?upto=     POST /v1/sessions/{id}/evaluate
//   POST /v1/runs                           GET  /v1/runs
//   GET  /v1/runs/{id}                      GET  /v1/runs/{id}/archive
//   POST /v1/runs/{id}/advance              POST /v1/runs/{id}/inject
//   POST /v1/runs/{id}/pause|resume|stop
//   GET  /v1/leaderboard/{challenge}        POST /v1/leaderboard/{challenge}
//
// Bodies are described by schemas/api.schema.json.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "coevo/error.hpp"
#include "coevo/json_util.hpp"

namespace coevo::api {

struct ServiceConfig {
    std::filesystem::path data_dir = "coevo-data";
    std::string host = "127.0.0.1";
    // 0 picks a free port.
    int port = 8711;
    // Concurrent episode evaluations; 0 means one per processor.
    unsigned max_evaluations = 0;
    // Served under /app when set.
    std::optional<std::filesystem::path> static_dir;
};

struct ApiError {
    std::string code;
    std::string message;
    int http_status = 500;
    Json details = Json::object();
};

// The closed set of error codes a response can carry.
const std::vector<std::string_view>& error_codes();

ApiError to_api_error(const Error& error);
Json api_error_to_json(const ApiError& error);

// Parses "host:port"; throws ParseError.
std::pair<std::string, int> parse_address(std::string_view address);

class Service {
public:
    explicit Service(ServiceConfig config);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    // Returns the bound port. Throws IoError.
    int bind();
    // Serves until stop(). Requires bind().
    void run();
    void stop();
    // Blocks until no run has queued generations.
    void wait_idle();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace coevo::api
