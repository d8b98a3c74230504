#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace setvalued {

enum class ErrorKind {
  NegativeEntry,
  SumOutOfTolerance,
  TooFewClasses,
  KOutOfRange,
  InvalidEpsilon,
  InvalidOffset,
  NegativeLambda,
  KbarOutOfRange,
  EbarOutOfRange,
  InvalidBeta,
  InvalidTolerance,
  ParameterOrderViolation,
  EmptyScoreSet,
  MissingLabels,
  MissingLogits,
  NegativeU,
  Saturated,
  InfeasiblePair,
  NonConvergence,
  ClassCountMismatch,
  LabelOutOfRange,
  ParseError,
  TooLargeForBruteForce,
  EmptyBins,
  InvalidDistribution,
  UsageError,
  IoError,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NegativeEntry: return "NegativeEntry";
    case ErrorKind::SumOutOfTolerance: return "SumOutOfTolerance";
    case ErrorKind::TooFewClasses: return "TooFewClasses";
    case ErrorKind::KOutOfRange: return "KOutOfRange";
    case ErrorKind::InvalidEpsilon: return "InvalidEpsilon";
    case ErrorKind::InvalidOffset: return "InvalidOffset";
    case ErrorKind::NegativeLambda: return "NegativeLambda";
    case ErrorKind::KbarOutOfRange: return "KbarOutOfRange";
    case ErrorKind::EbarOutOfRange: return "EbarOutOfRange";
    case ErrorKind::InvalidBeta: return "InvalidBeta";
    case ErrorKind::InvalidTolerance: return "InvalidTolerance";
    case ErrorKind::ParameterOrderViolation: return "ParameterOrderViolation";
    case ErrorKind::EmptyScoreSet: return "EmptyScoreSet";
    case ErrorKind::MissingLabels: return "MissingLabels";
    case ErrorKind::MissingLogits: return "MissingLogits";
    case ErrorKind::NegativeU: return "NegativeU";
    case ErrorKind::Saturated: return "Saturated";
    case ErrorKind::InfeasiblePair: return "InfeasiblePair";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::ClassCountMismatch: return "ClassCountMismatch";
    case ErrorKind::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::TooLargeForBruteForce: return "TooLargeForBruteForce";
    case ErrorKind::EmptyBins: return "EmptyBins";
    case ErrorKind::InvalidDistribution: return "InvalidDistribution";
    case ErrorKind::UsageError: return "UsageError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

/// Single exception type for the library. `value` carries the offending
/// quantity when there is one (actual sum, line number, requested level...).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message,
        std::optional<double> value = std::nullopt)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        message_(message),
        value_(value) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// The message without the kind prefix.
  const std::string& message() const noexcept { return message_; }
  std::optional<double> value() const noexcept { return value_; }

 private:
  ErrorKind kind_;
  std::string message_;
  std::optional<double> value_;
};

}  // namespace setvalued
