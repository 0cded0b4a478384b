#pragma once

#include <stdexcept>
#include <string>

namespace dobotc {

// Bad shapes or incompatible operand sizes.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Out-of-range or non-finite values handed to an operation.
struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Matrix equation has no (unique) solution: eigenvalue collision on the
// Lyapunov/Sylvester spectra condition.
struct SingularEquationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// No stabilizing gain exists or could be certified.
struct StabilizabilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Iterative method failed to converge or lost finiteness.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Controller/observer/compensator construction failed its certificate.
struct SynthesisError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Closed-loop state escaped the divergence guard during integration.
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed scenario configuration or input data file.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Filesystem failures when writing results.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace dobotc
