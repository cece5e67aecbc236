#include "triad/error.hpp"

namespace triad {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kIoFailure: return "IoFailure";
    case ErrorKind::kInvalidManifest: return "InvalidManifest";
    case ErrorKind::kInvalidMetadata: return "InvalidMetadata";
    case ErrorKind::kMissingBlob: return "MissingBlob";
    case ErrorKind::kShapeMismatch: return "ShapeMismatch";
    case ErrorKind::kChecksumMismatch: return "ChecksumMismatch";
    case ErrorKind::kNonFiniteValue: return "NonFiniteValue";
    case ErrorKind::kInsufficientRecords: return "InsufficientRecords";
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kEmptyCorpus: return "EmptyCorpus";
    case ErrorKind::kOutOfVocabulary: return "OutOfVocabulary";
    case ErrorKind::kEmptyInput: return "EmptyInput";
    case ErrorKind::kClassUnderpopulated: return "ClassUnderpopulated";
    case ErrorKind::kSingularAfterRegularization: return "SingularAfterRegularization";
    case ErrorKind::kDimensionMismatch: return "DimensionMismatch";
    case ErrorKind::kNonFiniteLogit: return "NonFiniteLogit";
    case ErrorKind::kSingleClassInput: return "SingleClassInput";
    case ErrorKind::kEmptyScores: return "EmptyScores";
    case ErrorKind::kIncompatiblePacks: return "IncompatiblePacks";
    case ErrorKind::kMissingSidecar: return "MissingSidecar";
    case ErrorKind::kCorruptSidecar: return "CorruptSidecar";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message, ErrorContext context)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      kind_(kind),
      context_(std::move(context)) {}

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kSingularAfterRegularization:
      return kExitNumerical;
    default:
      return kExitValidation;
  }
}

}  // namespace triad
