#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace rexp {

// Operand shapes do not fit the operation.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A documented precondition was violated by the caller.
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Iterative numerics failed or produced a non-finite value.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bundles handed to a fitted aggregator do not match the sources it was fitted on.
class LineageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Raised by training when the loss exceeds the divergence guard or stops being finite.
// `partial_curve` holds every loss recorded before the offending epoch.
class TrainingDiverged : public std::runtime_error {
public:
    TrainingDiverged(std::size_t epoch, std::vector<double> partial_curve)
        : std::runtime_error("training diverged at epoch " + std::to_string(epoch)),
          epoch_(epoch),
          partial_curve_(std::move(partial_curve)) {}

    std::size_t epoch() const noexcept { return epoch_; }
    const std::vector<double>& partial_curve() const noexcept { return partial_curve_; }

private:
    std::size_t epoch_;
    std::vector<double> partial_curve_;
};

// Configuration failed validation; every violated key is listed.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(std::vector<std::string> violations);
    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    std::vector<std::string> violations_;
};

}  // namespace rexp
