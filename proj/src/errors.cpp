#include "modflight/errors.hpp"

namespace modflight {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::SingularAttitude: return "SingularAttitude";
        case ErrorKind::RankDeficient: return "RankDeficient";
        case ErrorKind::Degenerate: return "Degenerate";
        case ErrorKind::SingularConfiguration: return "SingularConfiguration";
        case ErrorKind::NonFiniteState: return "NonFiniteState";
        case ErrorKind::InvalidCutoff: return "InvalidCutoff";
        case ErrorKind::DegeneratePolygon: return "DegeneratePolygon";
        case ErrorKind::InfeasibleTrim: return "InfeasibleTrim";
        case ErrorKind::IllConditioned: return "IllConditioned";
        case ErrorKind::OutOfRange: return "OutOfRange";
        case ErrorKind::EmptyWindow: return "EmptyWindow";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::ScenarioFailed: return "ScenarioFailed";
    }
    return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

ScenarioFailed::ScenarioFailed(std::string phase, std::string reason, const std::string& detail)
    : Error(ErrorKind::ScenarioFailed, phase + "/" + reason + ": " + detail),
      phase_(std::move(phase)),
      reason_(std::move(reason)) {}

}  // namespace modflight
