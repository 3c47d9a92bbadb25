#pragma once

#include <stdexcept>
#include <string>

namespace pats {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Incompatible tensor shapes.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Bad data handed to an operation (e.g. a label outside [0, classes)).
class InputError : public Error {
public:
    using Error::Error;
};

/// Operation called in the wrong lifecycle state (backward twice, step 0, missing grads).
class StateError : public Error {
public:
    using Error::Error;
};

/// Invalid hyperparameter or run-file content.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Invalid model or task specification.
class SpecError : public Error {
public:
    using Error::Error;
};

/// Filesystem failure while reading or writing checkpoints and reports.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace pats
