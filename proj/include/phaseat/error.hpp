#pragma once

#include <stdexcept>
#include <string>

namespace phaseat {

/// Base for every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dimension or extent mismatch between operands.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Object used in a state it does not support (stale trace, missing projection).
class StateError : public Error {
public:
    using Error::Error;
};

/// Class label or other index outside its valid range.
class IndexError : public Error {
public:
    using Error::Error;
};

/// Input data that admits no well-defined answer (e.g. zero variance).
class DegeneracyError : public Error {
public:
    using Error::Error;
};

/// Malformed file or byte stream.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Invalid experiment or training configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Non-finite values encountered where finite ones are required.
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace phaseat
