#pragma once

#include <stdexcept>
#include <string>

namespace lim {

/// Broad failure class. The C API maps each kind to a status code and the
/// CLI maps status codes to process exit codes.
enum class ErrorKind {
  kInvalidArgument,
  kIo,
  kParse,
  kNumeric,
  kCheckFailed,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorKind::kInvalidArgument, message);
}

}  // namespace lim
