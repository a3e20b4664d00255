#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace depthforge {

/// Broad failure categories. The CLI maps each to a stable exit code.
enum class ErrorKind {
  Parameter,     ///< invalid argument or violated precondition on a parameter
  Config,        ///< malformed or unknown configuration entry
  Io,            ///< file missing, unreadable or malformed
  Numeric,       ///< solver failure or data that cannot be processed
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ParameterError : public Error {
 public:
  explicit ParameterError(const std::string& what) : Error(ErrorKind::Parameter, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

/// Parse failure at a specific 1-based line of a text file.
class ParseError : public IoError {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& msg)
      : IoError(file + ":" + std::to_string(line) + ": " + msg), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorKind::Numeric, what) {}
};

/// Input that is well-formed but does not satisfy an operation's precondition
/// (too few points, empty trajectory, ...).
class PreconditionError : public NumericError {
 public:
  explicit PreconditionError(const std::string& what) : NumericError(what) {}
};

class ConvergenceError : public NumericError {
 public:
  ConvergenceError(double residual, int iterations)
      : NumericError("conjugate gradient did not converge: relative residual " +
                     std::to_string(residual) + " after " + std::to_string(iterations) +
                     " iterations"),
        residual_(residual),
        iterations_(iterations) {}
  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

/// Process exit codes shared by every CLI subcommand.
inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parameter:
    case ErrorKind::Config:
      return 2;
    case ErrorKind::Io:
      return 3;
    case ErrorKind::Numeric:
      return 4;
  }
  return 4;
}

}  // namespace depthforge
