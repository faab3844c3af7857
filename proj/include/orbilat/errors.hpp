#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace orbilat {

// Numerical failures: drift off the group manifold, singular decompositions,
// non-finite forces, singular fits. The CLI maps these to exit code 2.
class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class DecompositionError : public NumericalError {
  public:
    DecompositionError(const std::string& what, double singular_value)
        : NumericalError(what), singular_value_(singular_value) {}
    double singular_value() const noexcept { return singular_value_; }

  private:
    double singular_value_;
};

class DriftError : public NumericalError {
  public:
    DriftError(const std::string& what, double deviation)
        : NumericalError(what), deviation_(deviation) {}
    double deviation() const noexcept { return deviation_; }

  private:
    double deviation_;
};

class SingularFitError : public NumericalError {
  public:
    using NumericalError::NumericalError;
};

class InsufficientStatisticsError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Usage / configuration errors (exit code 1).
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Resume against a checkpoint written by a different configuration (exit code 3).
class CheckpointMismatchError : public std::runtime_error {
  public:
    CheckpointMismatchError(const std::string& what, std::uint64_t expected,
                            std::uint64_t found)
        : std::runtime_error(what), expected_(expected), found_(found) {}
    std::uint64_t expected() const noexcept { return expected_; }
    std::uint64_t found() const noexcept { return found_; }

  private:
    std::uint64_t expected_;
    std::uint64_t found_;
};

// Unreadable, truncated or foreign checkpoint file (exit code 3).
class CheckpointFormatError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace orbilat
