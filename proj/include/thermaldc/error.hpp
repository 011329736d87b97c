#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace thermaldc {

/// Base of every error raised by the library. The CLI maps the subclasses
/// onto process exit codes (see `exit_code`).
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidConfig : public Error {
public:
  InvalidConfig(std::string field, std::string reason)
      : Error("invalid config: " + field + ": " + reason),
        field_(std::move(field)), reason_(std::move(reason)) {}

  const std::string& field() const noexcept { return field_; }
  const std::string& reason() const noexcept { return reason_; }

private:
  std::string field_;
  std::string reason_;
};

/// An argument outside the mathematical domain of a model equation.
class DomainError : public Error {
public:
  using Error::Error;
};

class DimensionMismatch : public Error {
public:
  using Error::Error;
};

class EmptyInput : public Error {
public:
  using Error::Error;
};

class LengthMismatch : public Error {
public:
  using Error::Error;
};

class NonFiniteLoss : public Error {
public:
  using Error::Error;
};

class UnknownPolicy : public Error {
public:
  explicit UnknownPolicy(const std::string& name) : Error("unknown policy: " + name) {}
};

class DuplicatePolicy : public Error {
public:
  explicit DuplicatePolicy(const std::string& name) : Error("policy already registered: " + name) {}
};

class IoError : public Error {
public:
  using Error::Error;
};

class SchemaError : public Error {
public:
  using Error::Error;
};

/// Parse failure with a 1-based line (or row) position.
class ParseError : public Error {
public:
  ParseError(const std::string& where, std::size_t line, const std::string& what)
      : Error(where + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// Exit codes of the command-line tool.
enum class ExitCode : int { ok = 0, usage = 1, config = 2, io = 3, numeric = 4 };

inline ExitCode exit_code(const std::exception& e) noexcept {
  if (dynamic_cast<const InvalidConfig*>(&e) || dynamic_cast<const UnknownPolicy*>(&e) ||
      dynamic_cast<const DuplicatePolicy*>(&e))
    return ExitCode::config;
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const ParseError*>(&e) ||
      dynamic_cast<const SchemaError*>(&e))
    return ExitCode::io;
  if (dynamic_cast<const NonFiniteLoss*>(&e) || dynamic_cast<const DomainError*>(&e) ||
      dynamic_cast<const DimensionMismatch*>(&e) || dynamic_cast<const EmptyInput*>(&e) ||
      dynamic_cast<const LengthMismatch*>(&e))
    return ExitCode::numeric;
  return ExitCode::usage;
}

} // namespace thermaldc
