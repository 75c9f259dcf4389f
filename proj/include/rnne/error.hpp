#pragma once

#include <stdexcept>
#include <string>

namespace rnne {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text. Carries the 1-based line number.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

/// A snapshot needs more slots than the model capacity N.
class CapacityError : public Error {
public:
    using Error::Error;
};

/// Snapshots arrived out of order or with a gap.
class SequencingError : public Error {
public:
    using Error::Error;
};

/// A NaN/Inf showed up in parameters, activations or gradients.
class CorruptionError : public Error {
public:
    using Error::Error;
};

class TrainingError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class GenerationError : public Error {
public:
    using Error::Error;
};

}  // namespace rnne
