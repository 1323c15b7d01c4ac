#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace latentid {

enum class ErrorCode {
  EmptyInput,
  MismatchedRows,
  DimensionMismatch,
  NonFiniteEntries,
  TooManyRows,
  TooLarge,
  NotStochastic,
  NotKhatriRao,
  BadPartition,
  DuplicateValues,
  InvalidModel,
  NotThreeVariables,
  TooFewVariables,
  PreconditionFailed,
  DegenerateSpectrum,
  RankDeficient,
  NegativeWeights,
  ReconstructionFailed,
  NonUniqueStationary,
  NotStationary,
  IllConditioned,
  BadEdge,
  InconsistentOracle,
  NotDistinct,
  GridExhausted,
  NonMonotoneCdf,
  AmbiguousChaining,
  ParseError,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; the code identifies the failure
/// class so callers (and the CLI exit-code mapping) can branch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::MismatchedRows: return "MismatchedRows";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteEntries: return "NonFiniteEntries";
    case ErrorCode::TooManyRows: return "TooManyRows";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::NotStochastic: return "NotStochastic";
    case ErrorCode::NotKhatriRao: return "NotKhatriRao";
    case ErrorCode::BadPartition: return "BadPartition";
    case ErrorCode::DuplicateValues: return "DuplicateValues";
    case ErrorCode::InvalidModel: return "InvalidModel";
    case ErrorCode::NotThreeVariables: return "NotThreeVariables";
    case ErrorCode::TooFewVariables: return "TooFewVariables";
    case ErrorCode::PreconditionFailed: return "PreconditionFailed";
    case ErrorCode::DegenerateSpectrum: return "DegenerateSpectrum";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::NegativeWeights: return "NegativeWeights";
    case ErrorCode::ReconstructionFailed: return "ReconstructionFailed";
    case ErrorCode::NonUniqueStationary: return "NonUniqueStationary";
    case ErrorCode::NotStationary: return "NotStationary";
    case ErrorCode::IllConditioned: return "IllConditioned";
    case ErrorCode::BadEdge: return "BadEdge";
    case ErrorCode::InconsistentOracle: return "InconsistentOracle";
    case ErrorCode::NotDistinct: return "NotDistinct";
    case ErrorCode::GridExhausted: return "GridExhausted";
    case ErrorCode::NonMonotoneCdf: return "NonMonotoneCdf";
    case ErrorCode::AmbiguousChaining: return "AmbiguousChaining";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace latentid
