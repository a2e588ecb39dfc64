#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace radar {

enum class ErrorCategory { shape, config, data, usage, runtime };

std::string_view category_name(ErrorCategory category);

// Process exit code used by the command line tool: 2 config, 3 data/format,
// 4 everything else.
int exit_code(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}
  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& message) : Error(ErrorCategory::shape, message) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message) : Error(ErrorCategory::config, message) {}
};

// Malformed, truncated or inconsistent files and records.
class DataError : public Error {
 public:
  explicit DataError(const std::string& message) : Error(ErrorCategory::data, message) {}
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& message) : Error(ErrorCategory::usage, message) {}
};

}  // namespace radar
