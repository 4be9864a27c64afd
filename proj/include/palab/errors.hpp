#pragma once

#include <stdexcept>
#include <string>

namespace palab {

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Raised when a modelling assumption of the instance is violated.
struct AssumptionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CapacityError : std::length_error {
    using std::length_error::length_error;
};

// A learner touched data that had not been released yet.
struct ProtocolError : std::logic_error {
    using std::logic_error::logic_error;
};

struct EstimationFailure : std::runtime_error {
    std::string stage;
    EstimationFailure(std::string stage_tag, const std::string& what)
        : std::runtime_error(stage_tag + ": " + what), stage(std::move(stage_tag)) {}
};

}  // namespace palab
