#pragma once

#include <stdexcept>
#include <string>

namespace oscnet {

/// Base class for every error raised by the library. `kind()` is a stable
/// machine-readable tag used by the CLI error JSON.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

struct ParameterError : Error {
    explicit ParameterError(const std::string& m) : Error("parameter", m) {}
};

struct IndexError : Error {
    explicit IndexError(const std::string& m) : Error("index", m) {}
};

struct ParseError : Error {
    explicit ParseError(const std::string& m) : Error("parse", m) {}
};

struct InvariantError : Error {
    explicit InvariantError(const std::string& m) : Error("invariant", m) {}
};

// Integrator produced a non-finite phase.
struct NumericError : Error {
    explicit NumericError(const std::string& m) : Error("numeric-blowup", m) {}
};

// A quantity whose formula is singular on the given input (zero divisor,
// degenerate regressor, empty selection).
struct UndefinedError : Error {
    explicit UndefinedError(const std::string& m) : Error("undefined", m) {}
};

struct InsufficientDataError : Error {
    explicit InsufficientDataError(const std::string& m) : Error("insufficient-data", m) {}
};

struct IoError : Error {
    explicit IoError(const std::string& m) : Error("io", m) {}
};

}  // namespace oscnet
