#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qtseg {

/// Failure categories. The CLI prints the category name verbatim so callers
/// can dispatch on it.
enum class ErrorCategory {
  MalformedHeader,
  TruncatedData,
  UnsupportedMaxval,
  RectOutOfBounds,
  InvalidArgument,
  EmptyHistogram,
  ReportTreeMismatch,
  DimensionMismatch,
  EmptyClass,
  InvalidDataset,
  ZeroVector,
  DegenerateKernel,
  CsvParse,
  InvalidSpec,
  NonBinaryInput,
  IoError,
};

constexpr std::string_view category_name(ErrorCategory c) noexcept {
  switch (c) {
    case ErrorCategory::MalformedHeader: return "MalformedHeader";
    case ErrorCategory::TruncatedData: return "TruncatedData";
    case ErrorCategory::UnsupportedMaxval: return "UnsupportedMaxval";
    case ErrorCategory::RectOutOfBounds: return "RectOutOfBounds";
    case ErrorCategory::InvalidArgument: return "InvalidArgument";
    case ErrorCategory::EmptyHistogram: return "EmptyHistogram";
    case ErrorCategory::ReportTreeMismatch: return "ReportTreeMismatch";
    case ErrorCategory::DimensionMismatch: return "DimensionMismatch";
    case ErrorCategory::EmptyClass: return "EmptyClass";
    case ErrorCategory::InvalidDataset: return "InvalidDataset";
    case ErrorCategory::ZeroVector: return "ZeroVector";
    case ErrorCategory::DegenerateKernel: return "DegenerateKernel";
    case ErrorCategory::CsvParse: return "CsvParse";
    case ErrorCategory::InvalidSpec: return "InvalidSpec";
    case ErrorCategory::NonBinaryInput: return "NonBinaryInput";
    case ErrorCategory::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(std::string(category_name(category)) + ": " + message),
        category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

}  // namespace qtseg
