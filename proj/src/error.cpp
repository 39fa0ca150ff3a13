#include "pose_adapt/error.hpp"

namespace pose_adapt {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ZeroShoulderWidth: return "ZeroShoulderWidth";
    case ErrorCode::DegenerateBone: return "DegenerateBone";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::DegeneratePose: return "DegeneratePose";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NonFiniteActivation: return "NonFiniteActivation";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ResampleExhausted: return "ResampleExhausted";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace pose_adapt
