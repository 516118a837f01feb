#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace specwalk {

// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad caller input: sizes, ranges, malformed configuration.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Unreadable or degenerate data (files, meshes, clouds).
class DataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : DataError(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// Anything that prevented the oracle from returning a label.
class OracleError : public Error {
 public:
  using Error::Error;
};

class ConnectionError : public OracleError {
 public:
  using OracleError::OracleError;
};

class TimeoutError : public OracleError {
 public:
  using OracleError::OracleError;
};

// Malformed response, id mismatch, or forbidden fields on the wire.
class ProtocolError : public OracleError {
 public:
  using OracleError::OracleError;
};

// The server answered with an explicit {"error": ...} response.
class RemoteError : public OracleError {
 public:
  using OracleError::OracleError;
};

// A defense filter removed every point of the input.
class DefenseAnnihilated : public OracleError {
 public:
  using OracleError::OracleError;
};

class BudgetExhausted : public Error {
 public:
  explicit BudgetExhausted(std::uint64_t budget)
      : Error("query budget of " + std::to_string(budget) + " exhausted"), budget_(budget) {}
  std::uint64_t budget() const { return budget_; }

 private:
  std::uint64_t budget_;
};

// The oracle does not assign the source its true label; nothing to attack.
class SourceMisclassified : public Error {
 public:
  SourceMisclassified(int expected, int predicted)
      : Error("source classified as " + std::to_string(predicted) + ", expected " +
              std::to_string(expected)),
        predicted_(predicted) {}
  int predicted() const { return predicted_; }

 private:
  int predicted_;
};

// No target produced an adversarial candidate.
class AttackInfeasible : public Error {
 public:
  using Error::Error;
};

}  // namespace specwalk
