#pragma once

#include <stdexcept>
#include <string>

namespace fastslow {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Not enough observations to compute the requested statistic or fit.
struct InsufficientDataError : Error {
    using Error::Error;
};

// Non-finite or otherwise unusable values in an input batch.
struct InvalidDataError : Error {
    using Error::Error;
};

struct DimensionError : Error {
    using Error::Error;
};

// Rank-deficient normal equations with no regularization to fall back on.
struct SingularFitError : Error {
    using Error::Error;
};

struct EmptyEnsembleError : Error {
    using Error::Error;
};

// Monitoring requested before charts/profiles were built.
struct NotCharacterizedError : Error {
    using Error::Error;
};

// Factorization failed even after nugget escalation.
struct NumericalFailureError : Error {
    using Error::Error;
};

struct RegimeError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

}  // namespace fastslow
