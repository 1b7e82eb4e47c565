#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace simmer {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes disagree (rows, columns, parameter counts).
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Bad argument or precondition violation that is not a shape problem.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A NaN or infinity appeared in a loss, gradient or integrator state.
/// `where` is the iteration / epoch / step index when one applies, -1 otherwise.
class NonFiniteError : public Error {
public:
    NonFiniteError(const std::string& what, std::int64_t where = -1)
        : Error(what), where_(where) {}
    std::int64_t where() const noexcept { return where_; }

private:
    std::int64_t where_;
};

/// Input file or dataset problems (missing file, unknown column, bad cell).
class DataError : public Error {
public:
    using Error::Error;
};

/// Experiment configuration failed validation; the message carries the field path.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace simmer
