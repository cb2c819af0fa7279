#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace coevo {

enum class ErrorCode {
    // shape
    IndexOutOfRange,
    ChainFull,
    EmptyChain,
    UnquantizedAngle,
    InvalidLog,
    BadBounds,
    // challenges
    InvalidSpec,
    DegenerateSpec,
    UnknownChallenge,
    // evolve
    InvalidParams,
    RunDone,
    Unevaluated,
    IllegalTransition,
    // store
    UnknownSession,
    UnknownRun,
    InvalidAction,
    SeqOutOfRange,
    // io / wire formats
    ParseError,
    IoError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}
    // Wraps a lower-level failure, e.g. InvalidAction caused by ChainFull.
    Error(ErrorCode code, const std::string& message, ErrorCode cause)
        : std::runtime_error(message), code_(code), cause_(cause) {}

    ErrorCode code() const noexcept { return code_; }
    std::optional<ErrorCode> cause() const noexcept { return cause_; }

private:
    ErrorCode code_;
    std::optional<ErrorCode> cause_;
};

}  // namespace coevo
