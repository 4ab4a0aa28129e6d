#pragma once

#include <stdexcept>
#include <string>

namespace aclsim {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

/// Config text could not be parsed; carries the 1-based line number.
class ParseError : public InvalidConfig {
 public:
  ParseError(int line, const std::string& what)
      : InvalidConfig("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

class WrongFamily : public Error {
 public:
  using Error::Error;
};

class MeshMismatch : public Error {
 public:
  using Error::Error;
};

class SingularSystem : public Error {
 public:
  using Error::Error;
};

class XiZero : public Error {
 public:
  using Error::Error;
};

class UnsupportedCombination : public Error {
 public:
  using Error::Error;
};

class ModeViolation : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class OutOfDomain : public Error {
 public:
  using Error::Error;
};

class WrongVariant : public Error {
 public:
  using Error::Error;
};

class SolverFailure : public Error {
 public:
  SolverFailure(long step, const std::string& what)
      : Error(step >= 0 ? "step " + std::to_string(step) + ": " + what : what), step_(step) {}
  /// Step index at which the failure happened, -1 when not inside a time loop.
  long step() const noexcept { return step_; }

 private:
  long step_;
};

class EigSolverFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace aclsim
