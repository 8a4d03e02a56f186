#pragma once

#include <stdexcept>
#include <string>

namespace fgp {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Nonpositive or non-finite price coordinate, bad time argument.
struct DomainError : Error {
    using Error::Error;
};

// A generating function evaluated to a nonpositive value.
struct PositivityError : Error {
    using Error::Error;
};

// Path simulation produced a non-finite node.
struct SimulationError : Error {
    using Error::Error;
};

// A portfolio weight exceeded the configured bound.
struct WeightBoundError : Error {
    using Error::Error;
};

// Non-finite difference quotient, or derivatives requested from a
// non-smooth function.
struct DifferentiationError : Error {
    using Error::Error;
};

// The doubling quadrature failed to converge.
struct QuadratureError : Error {
    using Error::Error;
};

// Invalid configuration or descriptor; message names the field.
struct ConfigError : Error {
    using Error::Error;
};

// Three-step pricing rejected its step-1 input.
struct PipelineError : Error {
    using Error::Error;
};

} // namespace fgp
