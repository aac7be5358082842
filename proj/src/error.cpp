#include "neuroflow/error.hpp"

namespace neuroflow {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo: return "io";
    case ErrorCode::kUnsupportedFormat: return "unsupported-format";
    case ErrorCode::kBadMaxval: return "bad-maxval";
    case ErrorCode::kTruncated: return "truncated";
    case ErrorCode::kBadMagic: return "bad-magic";
    case ErrorCode::kSizeMismatch: return "size-mismatch";
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kEmptySequence: return "empty-sequence";
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kBackendFailure: return "backend-failure";
    case ErrorCode::kUndefinedIou: return "undefined-iou";
    case ErrorCode::kConfig: return "config";
  }
  return "unknown";
}

}  // namespace neuroflow
