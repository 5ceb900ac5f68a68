#pragma once

#include <stdexcept>
#include <string>

namespace hvaq {

// Error categories map one-to-one onto CLI exit codes (see tools/hvaq_cli.cpp).
enum class ErrorKind {
  io = 3,          // unreadable/unwritable file, bad image data
  config = 4,      // invalid configuration or argument values
  schema = 5,      // missing column, schema mismatch, invalid input data
  degenerate = 6,  // numerically undefined result (zero variance, starved segment)
  convergence = 7, // iterative solver hit its cap
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::io: return "io";
    case ErrorKind::config: return "config";
    case ErrorKind::schema: return "schema";
    case ErrorKind::degenerate: return "degenerate";
    case ErrorKind::convergence: return "convergence";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};
struct SchemaError : Error {
  explicit SchemaError(const std::string& what) : Error(ErrorKind::schema, what) {}
};
struct DegenerateError : Error {
  explicit DegenerateError(const std::string& what) : Error(ErrorKind::degenerate, what) {}
};
struct ConvergenceError : Error {
  explicit ConvergenceError(const std::string& what) : Error(ErrorKind::convergence, what) {}
};

}  // namespace hvaq
