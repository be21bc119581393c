#pragma once

#include <stdexcept>
#include <string>

namespace agrpose {

/// Failure categories. The CLI maps them onto process exit codes.
enum class ErrorKind {
  Config,     // invalid configuration or arguments
  Data,       // missing, truncated or malformed files; bad shapes
  Numerical,  // NaN/Inf encountered
  Geometry,   // point behind camera, index out of range, ...
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error config_error(const std::string& msg) { return Error(ErrorKind::Config, msg); }
inline Error data_error(const std::string& msg) { return Error(ErrorKind::Data, msg); }
inline Error numerical_error(const std::string& msg) { return Error(ErrorKind::Numerical, msg); }
inline Error geometry_error(const std::string& msg) { return Error(ErrorKind::Geometry, msg); }

}  // namespace agrpose
