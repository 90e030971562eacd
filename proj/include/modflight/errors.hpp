#pragma once

#include <stdexcept>
#include <string>

namespace modflight {

enum class ErrorKind {
    InvalidArgument,
    SingularAttitude,
    RankDeficient,
    Degenerate,
    SingularConfiguration,
    NonFiniteState,
    InvalidCutoff,
    DegeneratePolygon,
    InfeasibleTrim,
    IllConditioned,
    OutOfRange,
    EmptyWindow,
    ParseError,
    ScenarioFailed,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// Raised by the harness; `phase` names the stage that failed (calibrate, trim, flight),
// `reason` the condition (e.g. LiftoffFailure).
class ScenarioFailed : public Error {
public:
    ScenarioFailed(std::string phase, std::string reason, const std::string& detail);
    const std::string& phase() const noexcept { return phase_; }
    const std::string& reason() const noexcept { return reason_; }

private:
    std::string phase_;
    std::string reason_;
};

}  // namespace modflight
