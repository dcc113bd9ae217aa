#pragma once

#include <stdexcept>
#include <string>

namespace optomech {

// Process exit status associated with each failure family.
enum class ErrorKind : int {
  kConfig = 2,
  kData = 3,
  kNumeric = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

// Bad configuration or an argument outside the physical domain of an operation.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::kConfig, what) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorKind::kConfig, what) {}
};

// Measurement data that cannot be used as given.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::kData, what) {}
};

class InsufficientDataError : public DataError {
 public:
  using DataError::DataError;
};

class FitDegenerateError : public DataError {
 public:
  using DataError::DataError;
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorKind::kNumeric, what) {}
};

class InstabilityError : public NumericError {
 public:
  using NumericError::NumericError;
};

class SearchFailure : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace optomech
