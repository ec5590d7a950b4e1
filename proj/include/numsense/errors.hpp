#pragma once

#include <stdexcept>
#include <string>

namespace numsense {

/// Non-positive or otherwise out-of-domain numeric input.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Vector or matrix dimensions that do not line up.
class ShapeMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical procedure produced NaN/Inf or could not be solved.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Not enough observations for the requested statistic.
class InsufficientData : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed input file; the message carries the file and row.
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid experiment configuration; the message names the field path.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A pipeline stage was asked to run before the stage it depends on.
class DependencyError : public std::runtime_error {
public:
    DependencyError(const std::string& stage, const std::string& missing)
        : std::runtime_error("stage '" + stage + "' needs the outputs of '" + missing +
                             "'; run '" + missing + "' first"),
          missing_stage_(missing) {}

    const std::string& missing_stage() const noexcept { return missing_stage_; }

private:
    std::string missing_stage_;
};

}  // namespace numsense
