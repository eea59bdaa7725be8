#pragma once

#include <stdexcept>
#include <string>

namespace irkit {

// Base for every error raised by the library. Subclasses map onto CLI exit
// classes, so keep the hierarchy flat.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& token, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what + " near '" + token + "'"),
        line_(line),
        token_(token) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& token() const noexcept { return token_; }

 private:
  std::size_t line_;
  std::string token_;
};

// Structural problems found while building a graph (bad edge geometry, etc).
class GraphError : public Error {
 public:
  using Error::Error;
};

class SolveError : public Error {
 public:
  SolveError(const std::string& what, double residual = -1.0)
      : Error(what), residual_(residual) {}

  // Relative residual achieved before giving up, or -1 when no solve ran.
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

}  // namespace irkit
