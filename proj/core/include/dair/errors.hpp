#pragma once

#include <stdexcept>
#include <string>

namespace dair {

// Broad failure categories. The CLI maps each one to its own exit code.
enum class ErrorCategory {
  kShape = 2,
  kDomain = 3,
  kData = 4,
  kConfig = 5,
  kNumeric = 6,
  kIo = 7,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

// Tensor extents that do not fit the primitive consuming them.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(ErrorCategory::kShape, what) {}
};

// Arguments outside an operation's mathematical domain (negative losses,
// zero lambda for a bound, out-of-range class index, ...).
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorCategory::kDomain, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorCategory::kData, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCategory::kConfig, what) {}
};

// NaN/Inf showing up where a finite value is required.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorCategory::kNumeric, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCategory::kIo, what) {}
};

}  // namespace dair
