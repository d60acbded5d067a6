#pragma once

#include <stdexcept>
#include <string>

namespace nlhom {

// Error categories map to CLI exit codes.
enum class ErrorCategory : int {
  config = 2,
  geometry = 3,
  solver = 4,
  io = 5,
};

class Error : public std::runtime_error {
public:
  Error(ErrorCategory cat, const std::string& msg)
      : std::runtime_error(msg), category_(cat) {}
  ErrorCategory category() const noexcept { return category_; }
  int exit_code() const noexcept { return static_cast<int>(category_); }

private:
  ErrorCategory category_;
};

class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& msg) : Error(ErrorCategory::config, msg) {}
};

class GeometryError : public Error {
public:
  explicit GeometryError(const std::string& msg) : Error(ErrorCategory::geometry, msg) {}
};

class SolverError : public Error {
public:
  explicit SolverError(const std::string& msg) : Error(ErrorCategory::solver, msg) {}
};

class IoError : public Error {
public:
  explicit IoError(const std::string& msg) : Error(ErrorCategory::io, msg) {}
};

}  // namespace nlhom
