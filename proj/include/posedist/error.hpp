#pragma once

#include <stdexcept>
#include <string>

namespace posedist {

enum class ErrorCode {
  kInvalidArgument,
  kNonPositiveDepth,
  kLevelTooLarge,
  kDegenerateMesh,
  kOnAxisPoint,
  kEmptyMask,
  kObjectOutOfFrame,
  kEmptyMaskAfterOcclusion,
  kPixelOffMask,
  kCollinearPoints,
  kNoRealSolution,
  kTooFewCorrespondences,
  kNoVisiblePoints,
  kEmptyGt,
  kIo,
  kFormat,
};

const char* to_string(ErrorCode code);

/// Exception carrying a machine-readable code. Every failure surfaced by the
/// library is one of these.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace posedist
