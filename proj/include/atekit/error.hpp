#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace atekit {

enum class ErrorCode {
  InvalidArgument,
  ShapeMismatch,
  NonBinaryTreatment,
  NonFiniteValue,
  MissingValue,
  EmptyArm,
  RankDeficient,
  NoConvergence,
  SeparationDetected,
  SingleClass,
  TooFewRows,
  EmptyReferenceArm,
  ZeroArmWeight,
  MissingVarianceEstimates,
  EmptyAfterTrim,
  FoldArmEmpty,
  TooManyFailedReplicates,
  AllSplitsFailed,
  FileNotFound,
  MissingColumn,
  ParseError,
  SchemaMismatch,
  UnknownDgp,
  UnknownMethod,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Library-wide exception. Data errors may carry the offending row/column.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> row = std::nullopt,
        std::optional<std::size_t> column = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> row() const noexcept { return row_; }
  std::optional<std::size_t> column() const noexcept { return column_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> row_;
  std::optional<std::size_t> column_;
};

/// True for errors caused by malformed input rather than by estimation.
bool is_validation_error(ErrorCode code) noexcept;

}  // namespace atekit
