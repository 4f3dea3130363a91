#pragma once

#include <stdexcept>
#include <string>

namespace charsoft {

/// Failure classes. The numeric values double as CLI exit codes.
enum class ErrorKind : int {
  kUsage = 2,
  kSchema = 3,
  kPrecondition = 4,
  kNumeric = 5,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::kUsage, what) {}
};

/// Malformed file or config document.
class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& what) : Error(ErrorKind::kSchema, what) {}
};

/// Inputs are well-formed but violate an operation's precondition.
class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& what)
      : Error(ErrorKind::kPrecondition, what) {}
};

/// Non-finite values or divergence.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorKind::kNumeric, what) {}
};

}  // namespace charsoft
