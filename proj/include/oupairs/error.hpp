#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace oupairs {

enum class ErrorKind {
  InvalidArgument,
  FileNotFound,
  EmptyFile,
  MalformedRow,
  NonPositivePrice,
  DuplicateDate,
  NoOverlap,
  DegenerateSeries,
  NoConvergence,
  TickerMismatch,
  AllFitsFailed,
  WindowTooLong,
  NonPositiveCost,
  DateMisalignment,
  InsufficientData,
  NoDefinedSharpe,
  ConfigError,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::FileNotFound: return "FileNotFound";
    case ErrorKind::EmptyFile: return "EmptyFile";
    case ErrorKind::MalformedRow: return "MalformedRow";
    case ErrorKind::NonPositivePrice: return "NonPositivePrice";
    case ErrorKind::DuplicateDate: return "DuplicateDate";
    case ErrorKind::NoOverlap: return "NoOverlap";
    case ErrorKind::DegenerateSeries: return "DegenerateSeries";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::TickerMismatch: return "TickerMismatch";
    case ErrorKind::AllFitsFailed: return "AllFitsFailed";
    case ErrorKind::WindowTooLong: return "WindowTooLong";
    case ErrorKind::NonPositiveCost: return "NonPositiveCost";
    case ErrorKind::DateMisalignment: return "DateMisalignment";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::NoDefinedSharpe: return "NoDefinedSharpe";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-checkable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace oupairs
