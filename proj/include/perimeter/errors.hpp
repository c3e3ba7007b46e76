#pragma once

#include <stdexcept>
#include <string>

namespace perimeter {

/// Argument outside the documented domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A structural property (unimodality, architecture match, ...) does not hold.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// NaN/Inf reached a numeric routine, or a solver/trainer produced one.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A study could not produce aggregate results.
class StudyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad or incomplete configuration. `line` is 0 when no source line applies.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

}  // namespace perimeter
