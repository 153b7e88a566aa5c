#pragma once

#include <stdexcept>
#include <string>

namespace sputter {

// Bad input to a pure function (non-finite value, zero-length vector, ...).
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// The flux fit has no signal to work with.
class DegenerateFit : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Factorization or other linear-algebra failure that survived the jitter ladder.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Configuration files or config structs that do not validate.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ExhaustedCandidates : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Offline replay was asked for a setpoint that is not in the stored dataset.
class ReplayMiss : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace sputter
