#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace plkcalib {

enum class ErrorCode {
  DegenerateEndpoints,
  InvalidLine,
  InvalidSegment,
  InvalidIntrinsics,
  InvalidPose,
  InvalidConfig,
  ZeroNormal,
  ProjectionDegenerate,
  InsufficientLines,
  DegenerateConfiguration,
  BehindCamera,
  Parse,
};

std::string_view to_string(ErrorCode code);

/// Exception type for every failure raised by the library.
class CalibError : public std::runtime_error {
 public:
  CalibError(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace plkcalib
