#pragma once

#include <stdexcept>
#include <string>

namespace skillforge {

// Bad numeric input to a geometric operation (non-unit normal, missing center, ...).
struct InputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ContractViolation : std::logic_error {
    using std::logic_error::logic_error;
};

struct CompositionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EvaluationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SimulationBlowup : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DegenerateUpdate : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SequencingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace skillforge
