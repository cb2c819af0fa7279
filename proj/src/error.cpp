#include "coevo/error.hpp"

namespace coevo {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::ChainFull: return "ChainFull";
    case ErrorCode::EmptyChain: return "EmptyChain";
    case ErrorCode::UnquantizedAngle: return "UnquantizedAngle";
    case ErrorCode::InvalidLog: return "InvalidLog";
    case ErrorCode::BadBounds: return "BadBounds";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::DegenerateSpec: return "DegenerateSpec";
    case ErrorCode::UnknownChallenge: return "UnknownChallenge";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::RunDone: return "RunDone";
    case ErrorCode::Unevaluated: return "Unevaluated";
    case ErrorCode::IllegalTransition: return "IllegalTransition";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::UnknownRun: return "UnknownRun";
    case ErrorCode::InvalidAction: return "InvalidAction";
    case ErrorCode::SeqOutOfRange: return "SeqOutOfRange";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace coevo
