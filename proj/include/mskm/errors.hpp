#pragma once

#include <stdexcept>
#include <string>

namespace mskm {

enum class ErrorCode {
  InvalidInput = 1,
  EmptyInput = 2,
  EmptyMask = 3,
  FormatError = 4,
  ResourceLimit = 5,
  IoError = 6,
  Internal = 7,
};

// All library failures are reported through this exception; the C API maps
// the code field onto its status enum.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void throw_invalid(const std::string& msg) {
  throw Error(ErrorCode::InvalidInput, msg);
}
[[noreturn]] inline void throw_format(const std::string& msg) {
  throw Error(ErrorCode::FormatError, msg);
}
[[noreturn]] inline void throw_io(const std::string& msg) {
  throw Error(ErrorCode::IoError, msg);
}

}  // namespace mskm
