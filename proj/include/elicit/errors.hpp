#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace elicit {

// Malformed input row. Carries the 1-based line number of the offending row.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class DuplicateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Violation of the elicitation protocol, e.g. asking a user the same query twice.
class ProtocolError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace elicit
