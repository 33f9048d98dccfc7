#pragma once

#include <stdexcept>
#include <string>

namespace vtab {

struct Error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid configuration or precondition violation detected before any work.
struct ConfigError : public Error {
  using Error::Error;
};

// The requested anomalies cannot be placed in the given series.
struct InfeasibleInjection : public Error {
  using Error::Error;
};

// Operation not defined for this granularity / generator combination.
struct UnsupportedError : public Error {
  using Error::Error;
};

// Input file content could not be decoded. `line` is 1-based, 0 when unknown.
struct FormatError : public Error {
  FormatError(const std::string& message, std::size_t line_ = 0)
      : Error(line_ ? "line " + std::to_string(line_) + ": " + message : message), line(line_) {}
  std::size_t line;
};

// Matrix entry rejected by one of the dataset exclusion rules.
struct ExclusionError : public ConfigError {
  ExclusionError(const std::string& message, std::string rule_)
      : ConfigError(message), rule(std::move(rule_)) {}
  std::string rule;
};

// Endpoint kept failing with retryable errors after all retries.
struct TransientFailure : public Error {
  using Error::Error;
};

}  // namespace vtab
