#pragma once

#include <stdexcept>
#include <string>

namespace crdrn {

// Invalid or inconsistent experiment configuration; `field` names the
// offending key so the CLI can report it and exit 1.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error("config error: " + field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Malformed line in a deployment file, config file or event log.
class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& what)
      : std::runtime_error("parse error at line " + std::to_string(line) + ": " + what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Random placement could not satisfy the CMR-backbone invariant within the
// retry budget.
class DeploymentError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An opportunity map in standalone mode was offered CR-device feedback.
class ModeViolation : public std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace crdrn
