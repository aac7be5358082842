#pragma once

#include <stdexcept>
#include <string>

namespace neuroflow {

enum class ErrorCode {
  kIo,                  // file missing, unreadable or unwritable
  kUnsupportedFormat,   // wrong Netpbm magic
  kBadMaxval,
  kTruncated,           // payload shorter than the header implies
  kBadMagic,            // .flo magic mismatch
  kSizeMismatch,        // .flo header vs payload
  kDimensionMismatch,
  kEmptySequence,
  kInvalidArgument,
  kBackendFailure,
  kUndefinedIou,
  kConfig,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorCode::kInvalidArgument, what);
}

}  // namespace neuroflow
