#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mrsched {

enum class ErrorKind {
    CyclicDependency,
    UnknownDependency,
    NoFeasibleRobot,
    DimensionMismatch,
    DuplicateId,
    InvalidValue,
    NonFiniteInput,
    UnassignedTask,
    DoubleAssignment,
    Infeasible,
    FrozenInfeasible,
    Stalled,
    RoundLimit,
    ShapeMismatch,
    MissingHint,
    EmptyTaskList,
    SchemaInvalid,
    SchemaInvalidAfterRetries,
    Timeout,
    TransportError,
    ParseError,
    SpecInvalid,
    ReplanInfeasible,
};

constexpr std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::CyclicDependency: return "CyclicDependency";
    case ErrorKind::UnknownDependency: return "UnknownDependency";
    case ErrorKind::NoFeasibleRobot: return "NoFeasibleRobot";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::DuplicateId: return "DuplicateId";
    case ErrorKind::InvalidValue: return "InvalidValue";
    case ErrorKind::NonFiniteInput: return "NonFiniteInput";
    case ErrorKind::UnassignedTask: return "UnassignedTask";
    case ErrorKind::DoubleAssignment: return "DoubleAssignment";
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::FrozenInfeasible: return "FrozenInfeasible";
    case ErrorKind::Stalled: return "Stalled";
    case ErrorKind::RoundLimit: return "RoundLimit";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::MissingHint: return "MissingHint";
    case ErrorKind::EmptyTaskList: return "EmptyTaskList";
    case ErrorKind::SchemaInvalid: return "SchemaInvalid";
    case ErrorKind::SchemaInvalidAfterRetries: return "SchemaInvalidAfterRetries";
    case ErrorKind::Timeout: return "Timeout";
    case ErrorKind::TransportError: return "TransportError";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::SpecInvalid: return "SpecInvalid";
    case ErrorKind::ReplanInfeasible: return "ReplanInfeasible";
    }
    return "Unknown";
}

/// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace mrsched
