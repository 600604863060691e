#pragma once

#include <stdexcept>
#include <string>

namespace scour {

// Base error. `code()` is a short machine-readable tag surfaced by the CLI.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error("parse", "line " + std::to_string(line) + ": " + message), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ParameterError : public Error {
 public:
  explicit ParameterError(const std::string& message) : Error("parameter", message) {}
};

}  // namespace scour
