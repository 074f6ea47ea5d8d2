#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace idrift {

// Every failure the toolkit reports. The kind is what callers branch on; the
// message carries the human-readable detail.
enum class ErrorKind {
  // network_core
  AsymmetricWeights,
  NegativeWeight,
  NonFiniteWeight,
  DisconnectedGraph,
  DimensionMismatch,
  InfiniteTimeEntry,
  NotSymmetric,
  SingularK,
  // nu_distribution
  InvalidParams,
  DomainViolation,
  ZeroDriftDenominator,
  EmptySubset,
  DisconnectedRestriction,
  ConditioningOutOfSupport,
  OutOfSupport,
  // sde_engine
  KNearSingular,
  HorizonExceeded,
  IncompleteRecord,
  BeyondHorizon,
  RuleNeverTriggered,
  // bessel
  TimeOutOfRange,
  GridOutOfRange,
  // vrjp
  NonzeroDiagonal,
  IsolatedStart,
  NonpositivePsi,
  BlockNotPD,
  // stats
  EmptySample,
  // cli
  ParseError,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::AsymmetricWeights: return "AsymmetricWeights";
    case ErrorKind::NegativeWeight: return "NegativeWeight";
    case ErrorKind::NonFiniteWeight: return "NonFiniteWeight";
    case ErrorKind::DisconnectedGraph: return "DisconnectedGraph";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::InfiniteTimeEntry: return "InfiniteTimeEntry";
    case ErrorKind::NotSymmetric: return "NotSymmetric";
    case ErrorKind::SingularK: return "SingularK";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::DomainViolation: return "DomainViolation";
    case ErrorKind::ZeroDriftDenominator: return "ZeroDriftDenominator";
    case ErrorKind::EmptySubset: return "EmptySubset";
    case ErrorKind::DisconnectedRestriction: return "DisconnectedRestriction";
    case ErrorKind::ConditioningOutOfSupport: return "ConditioningOutOfSupport";
    case ErrorKind::OutOfSupport: return "OutOfSupport";
    case ErrorKind::KNearSingular: return "KNearSingular";
    case ErrorKind::HorizonExceeded: return "HorizonExceeded";
    case ErrorKind::IncompleteRecord: return "IncompleteRecord";
    case ErrorKind::BeyondHorizon: return "BeyondHorizon";
    case ErrorKind::RuleNeverTriggered: return "RuleNeverTriggered";
    case ErrorKind::TimeOutOfRange: return "TimeOutOfRange";
    case ErrorKind::GridOutOfRange: return "GridOutOfRange";
    case ErrorKind::NonzeroDiagonal: return "NonzeroDiagonal";
    case ErrorKind::IsolatedStart: return "IsolatedStart";
    case ErrorKind::NonpositivePsi: return "NonpositivePsi";
    case ErrorKind::BlockNotPD: return "BlockNotPD";
    case ErrorKind::EmptySample: return "EmptySample";
    case ErrorKind::ParseError: return "ParseError";
  }
  return "Unknown";
}

// Numerical aborts are the failures that come from the integrator rather than
// from bad input; the CLI maps them to their own exit code.
constexpr bool is_numerical_abort(ErrorKind kind) {
  return kind == ErrorKind::KNearSingular || kind == ErrorKind::HorizonExceeded;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail)
      : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& detail) {
  throw Error(kind, detail);
}

}  // namespace idrift
