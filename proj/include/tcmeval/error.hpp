#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tcmeval {

/// Base for every error raised by the library. Callers that only care about
/// "bad input vs. bug" can catch `InputError` and `Error` respectively.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Problems with user-supplied data or parameters (CLI exit code 1).
class InputError : public Error {
public:
    using Error::Error;
};

class ParseError : public InputError {
public:
    ParseError(std::size_t line, const std::string& what)
        : InputError("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class SchemaError : public InputError {
public:
    using InputError::InputError;
};

class ValidationError : public InputError {
public:
    using InputError::InputError;
};

class ParameterError : public InputError {
public:
    using InputError::InputError;
};

/// Raised when an embedding backend fails; the message names the pair.
class EmbeddingError : public Error {
public:
    using Error::Error;
};

} // namespace tcmeval
