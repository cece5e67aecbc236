#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace triad {

enum class ErrorKind {
  kIoFailure,
  kInvalidManifest,
  kInvalidMetadata,
  kMissingBlob,
  kShapeMismatch,
  kChecksumMismatch,
  kNonFiniteValue,
  kInsufficientRecords,
  kInvalidArgument,
  kEmptyCorpus,
  kOutOfVocabulary,
  kEmptyInput,
  kClassUnderpopulated,
  kSingularAfterRegularization,
  kDimensionMismatch,
  kNonFiniteLogit,
  kSingleClassInput,
  kEmptyScores,
  kIncompatiblePacks,
  kMissingSidecar,
  kCorruptSidecar,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Where an error happened. Fields are filled when they apply.
struct ErrorContext {
  std::string blob;
  std::optional<std::size_t> record;
  std::optional<std::size_t> layer;
  std::optional<std::size_t> available;
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, ErrorContext context = {});

  ErrorKind kind() const noexcept { return kind_; }
  const ErrorContext& context() const noexcept { return context_; }

 private:
  ErrorKind kind_;
  ErrorContext context_;
};

// Process exit codes: 0 success, 1 validation error, 2 numerical failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitNumerical = 2;

int exit_code_for(ErrorKind kind) noexcept;

}  // namespace triad
