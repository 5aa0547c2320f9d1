#pragma once

#include <stdexcept>
#include <string>

namespace limevis {

// Mirrors lv_status in limevis.h; keep the numeric values in sync.
enum class ErrorCode : int {
  InvalidArgument = 1,
  UnsupportedFormat = 2,
  TruncatedData = 3,
  MalformedFile = 4,
  IndexOutOfRange = 5,
  LabelImageCountMismatch = 6,
  DimensionMismatch = 7,
  InvalidParams = 8,
  SingularSystem = 9,
  ExternalPredictorFailure = 10,
  EmptyDataset = 11,
  EmptyCategory = 12,
  UnknownImage = 13,
  SuperpixelOutOfRange = 14,
  OutOfBounds = 15,
  TooFewPoints = 16,
  Io = 17,
  NoSession = 18,
  Internal = 99,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace limevis
