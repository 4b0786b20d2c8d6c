#pragma once

#include <stdexcept>
#include <string>

namespace jess {

// Error families map onto process exit codes: configuration problems exit 1,
// input/format problems exit 2, runtime divergence/safety problems exit 3.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class InputError : public Error {
public:
    using Error::Error;
};

class IoError : public InputError {
public:
    using InputError::InputError;
};

class FormatError : public InputError {
public:
    using InputError::InputError;
};

class LengthMismatchError : public InputError {
public:
    using InputError::InputError;
};

class ShapeError : public InputError {
public:
    using InputError::InputError;
};

class SafetyError : public Error {
public:
    using Error::Error;
};

class DivergenceError : public Error {
public:
    using Error::Error;
};

int exit_code_for(const std::exception& e);

} // namespace jess
