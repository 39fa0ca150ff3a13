#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pose_adapt {

enum class ErrorCode {
  InvalidArgument,
  ZeroShoulderWidth,
  DegenerateBone,
  IndexOutOfRange,
  DegeneratePose,
  EmptyInput,
  NonFiniteActivation,
  DimensionMismatch,
  ResampleExhausted,
  ParseError,
  IoError,
};

std::string_view to_string(ErrorCode code);

// All library failures are reported through this type; the CLI maps the code
// to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace pose_adapt
