#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dpk {

enum class ErrorKind {
    InvalidEvent,
    InvalidMeasure,
    NullNonemptyConditioner,
    SpaceMismatch,
    BudgetExceeded,
    InvalidWeights,
    InvalidModel,
    UnknownSymbol,
    DuplicateObservation,
    ModelMismatch,
    PriorNullBlock,
    ShapeMismatch,
    NullConditioner,
    NullEnvelope,
    InvalidWitness,
    InvalidCoarsening,
    EmptyPreimage,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::InvalidEvent: return "InvalidEvent";
    case ErrorKind::InvalidMeasure: return "InvalidMeasure";
    case ErrorKind::NullNonemptyConditioner: return "NullNonemptyConditioner";
    case ErrorKind::SpaceMismatch: return "SpaceMismatch";
    case ErrorKind::BudgetExceeded: return "BudgetExceeded";
    case ErrorKind::InvalidWeights: return "InvalidWeights";
    case ErrorKind::InvalidModel: return "InvalidModel";
    case ErrorKind::UnknownSymbol: return "UnknownSymbol";
    case ErrorKind::DuplicateObservation: return "DuplicateObservation";
    case ErrorKind::ModelMismatch: return "ModelMismatch";
    case ErrorKind::PriorNullBlock: return "PriorNullBlock";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NullConditioner: return "NullConditioner";
    case ErrorKind::NullEnvelope: return "NullEnvelope";
    case ErrorKind::InvalidWitness: return "InvalidWitness";
    case ErrorKind::InvalidCoarsening: return "InvalidCoarsening";
    case ErrorKind::EmptyPreimage: return "EmptyPreimage";
    }
    return "Unknown";
}

/// Every failure raised by the library. `generator()` is set when the error
/// can be pinned to one member of a credal set.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what, std::optional<std::size_t> generator = std::nullopt)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), generator_(generator) {}

    ErrorKind kind() const noexcept { return kind_; }
    std::optional<std::size_t> generator() const noexcept { return generator_; }

private:
    ErrorKind kind_;
    std::optional<std::size_t> generator_;
};

} // namespace dpk
