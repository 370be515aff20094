#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace amfpmc {

enum class ErrorKind {
  SelfLoop,
  ConflictingLabel,
  UnknownDrug,
  InvalidClass,
  EmptyAfterNormalization,
  EmptyInput,
  UnknownPhrase,
  InvalidDimensions,
  ShapeMismatch,
  EmptyBatch,
  DegenerateLabels,
  NoPositives,
  AllEmpty,
  TooFewPairs,
  EmptyDataset,
  EmptyIntersection,
  EmptySubset,
  EmptyGrid,
  IoError,
  ParseError,
  FormatError,
  DimensionMismatch,
  InvalidConfig,
  LeakageDetected,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::SelfLoop: return "SelfLoop";
    case ErrorKind::ConflictingLabel: return "ConflictingLabel";
    case ErrorKind::UnknownDrug: return "UnknownDrug";
    case ErrorKind::InvalidClass: return "InvalidClass";
    case ErrorKind::EmptyAfterNormalization: return "EmptyAfterNormalization";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::UnknownPhrase: return "UnknownPhrase";
    case ErrorKind::InvalidDimensions: return "InvalidDimensions";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::EmptyBatch: return "EmptyBatch";
    case ErrorKind::DegenerateLabels: return "DegenerateLabels";
    case ErrorKind::NoPositives: return "NoPositives";
    case ErrorKind::AllEmpty: return "AllEmpty";
    case ErrorKind::TooFewPairs: return "TooFewPairs";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::EmptyIntersection: return "EmptyIntersection";
    case ErrorKind::EmptySubset: return "EmptySubset";
    case ErrorKind::EmptyGrid: return "EmptyGrid";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::FormatError: return "FormatError";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::LeakageDetected: return "LeakageDetected";
  }
  return "Unknown";
}

/// Every failure in the library is reported as an Error carrying a kind that
/// callers (and the CLI exit path) can dispatch on.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind),
        detail_(what) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// The message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace amfpmc
