#pragma once

#include <stdexcept>
#include <string>

namespace clnas {

/// Bad layer shapes, bad config keys, bad CLI input.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Non-finite values encountered during numeric work.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed input files (IDX, CIFAR batches, containers).
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Internal contract violations (double commit, missing optimizer slot, ...).
struct InvariantError : std::runtime_error {
    explicit InvariantError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace clnas
