#pragma once

#include <stdexcept>
#include <string>

namespace cnm {

// Base for all library errors. The CLI maps subtypes to exit codes.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad argument values (probabilities out of range, empty grids, ...).
class ArgumentError : public Error {
public:
    using Error::Error;
};

// Malformed input text (edge lists, CSV tables).
class ParseError : public Error {
public:
    using Error::Error;
};

// Inputs that parse but do not fit together (id mismatches, missing columns).
class ValidationError : public Error {
public:
    using Error::Error;
};

// A motif schema that cannot be used for the requested operation.
class SchemaError : public Error {
public:
    using Error::Error;
};

// Estimation cannot proceed (zero-probability member, too many failed resamples).
class EstimationError : public Error {
public:
    using Error::Error;
};

// Tree fitting failures (empty estimation leaf).
class FitError : public Error {
public:
    using Error::Error;
};

// Randomization inference failures (empty focal set).
class InferenceError : public Error {
public:
    using Error::Error;
};

// K-selection found no admissible row.
class SelectionError : public Error {
public:
    using Error::Error;
};

}  // namespace cnm
