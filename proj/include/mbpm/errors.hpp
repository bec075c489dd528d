#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace mbpm {

// Exit-code taxonomy shared with the CLI: 2 parse, 3 config, 4 numeric.
enum class ErrorCategory { parse = 2, config = 3, numeric = 4 };

class Error : public std::runtime_error {
public:
  Error(ErrorCategory category, std::string name, const std::string& what)
      : std::runtime_error(name + ": " + what),
        category_(category),
        name_(std::move(name)) {}

  ErrorCategory category() const { return category_; }
  const std::string& name() const { return name_; }

private:
  ErrorCategory category_;
  std::string name_;
};

/// Tick-file errors; row is 1-based, the header line is row 1 (0 = no row).
class ParseError : public Error {
public:
  ParseError(std::string name, const std::string& what, std::size_t row = 0)
      : Error(ErrorCategory::parse, std::move(name),
              row ? "row " + std::to_string(row) + ": " + what : what),
        row_(row) {}

  std::size_t row() const { return row_; }

private:
  std::size_t row_;
};

class ConfigError : public Error {
public:
  ConfigError(std::string name, const std::string& what)
      : Error(ErrorCategory::config, std::move(name), what) {}
};

class NumericError : public Error {
public:
  NumericError(std::string name, const std::string& what)
      : Error(ErrorCategory::numeric, std::move(name), what) {}
};

}  // namespace mbpm
