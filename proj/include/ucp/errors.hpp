#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ucp {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed expression text. `offset()` is the byte offset of the offending token.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Evaluation outside the domain of an expression (division by zero, log/sqrt of a bad argument, overflow).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A mathematical hypothesis required by a stage does not hold (e.g. hyperbolicity, invertibility).
class PreconditionError : public Error {
public:
    PreconditionError(std::string stage, const std::string& what)
        : Error(stage + ": " + what), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

/// An iterative method did not reach its tolerance.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// Invalid scenario input; `key()` names the offending scenario key.
class ScenarioError : public Error {
public:
    ScenarioError(std::string key, const std::string& what)
        : Error(key + ": " + what), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

} // namespace ucp
