#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace uavmpc {

/// Invalid physical or algorithmic parameter. `field()` names the offending value.
class ParameterError : public std::invalid_argument {
public:
  ParameterError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)), reason_(what) {}
  const std::string& field() const noexcept { return field_; }
  /// The message without the field prefix.
  const std::string& reason() const noexcept { return reason_; }

private:
  std::string field_;
  std::string reason_;
};

class ArgumentError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// NaN or infinite value where a finite one is required.
class NumericError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// The sensor origin lies inside an obstacle.
class SensingError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// APF repulsion evaluated with zero obstacle distance.
class SingularityError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Scenario file could not be parsed or failed validation.
class ConfigError : public std::runtime_error {
public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

  /// Same error with `context` (e.g. a file name) prepended to the message.
  ConfigError with_context(const std::string& context) const {
    return ConfigError(field_, context + ": " + what(), Raw{});
  }

private:
  struct Raw {};
  ConfigError(std::string field, const std::string& message, Raw)
      : std::runtime_error(message), field_(std::move(field)) {}
  std::string field_;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace uavmpc
