#include "error.hpp"

namespace limevis {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::TruncatedData: return "TruncatedData";
    case ErrorCode::MalformedFile: return "MalformedFile";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::LabelImageCountMismatch: return "LabelImageCountMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::ExternalPredictorFailure: return "ExternalPredictorFailure";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::EmptyCategory: return "EmptyCategory";
    case ErrorCode::UnknownImage: return "UnknownImage";
    case ErrorCode::SuperpixelOutOfRange: return "SuperpixelOutOfRange";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::Io: return "Io";
    case ErrorCode::NoSession: return "NoSession";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

}  // namespace limevis
