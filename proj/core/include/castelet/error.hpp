#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace castelet {

// Violated precondition of a library call (wrong skeleton, bad counts, ...).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Invalid configuration value such as an unknown rotation-order label.
class ConfigError : public std::runtime_error {
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

class ConversionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BindingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SplitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class HandshakeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EffectError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace castelet
