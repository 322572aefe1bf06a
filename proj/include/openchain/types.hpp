#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace openchain {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Count = std::int64_t;
using CountVector = Eigen::Matrix<Count, Eigen::Dynamic, 1>;
using CountMatrix = Eigen::Matrix<Count, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class ErrorCode {
  kInvalidArgument,
  kNegativeEntry,
  kRowSumExceedsOne,
  kSpectralRadiusNotSubunit,
  kNotIrreducible,
  kNotAperiodic,
  kNoConvergence,
  kInvalidProbabilities,
  kHiddenChainNotIrreducible,
  kUnsupportedVariant,
  kNonStationarySchedule,
  kCountOverflow,
  kTruncationTooSmall,
  kSingularSystem,
  kToleranceNotReached,
  kZeroVarianceState,
  kNotContracting,
  kStepTooLarge,
  kSeriesTooShort,
  kShapeMismatch,
  kConfigParse,
  kConfigInvalid,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kNegativeEntry: return "NegativeEntry";
    case ErrorCode::kRowSumExceedsOne: return "RowSumExceedsOne";
    case ErrorCode::kSpectralRadiusNotSubunit: return "SpectralRadiusNotSubunit";
    case ErrorCode::kNotIrreducible: return "NotIrreducible";
    case ErrorCode::kNotAperiodic: return "NotAperiodic";
    case ErrorCode::kNoConvergence: return "NoConvergence";
    case ErrorCode::kInvalidProbabilities: return "InvalidProbabilities";
    case ErrorCode::kHiddenChainNotIrreducible: return "HiddenChainNotIrreducible";
    case ErrorCode::kUnsupportedVariant: return "UnsupportedVariant";
    case ErrorCode::kNonStationarySchedule: return "NonStationarySchedule";
    case ErrorCode::kCountOverflow: return "CountOverflow";
    case ErrorCode::kTruncationTooSmall: return "TruncationTooSmall";
    case ErrorCode::kSingularSystem: return "SingularSystem";
    case ErrorCode::kToleranceNotReached: return "ToleranceNotReached";
    case ErrorCode::kZeroVarianceState: return "ZeroVarianceState";
    case ErrorCode::kNotContracting: return "NotContracting";
    case ErrorCode::kStepTooLarge: return "StepTooLarge";
    case ErrorCode::kSeriesTooShort: return "SeriesTooShort";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kConfigParse: return "ConfigParse";
    case ErrorCode::kConfigInvalid: return "ConfigInvalid";
  }
  return "Unknown";
}

/// Every failure in the library is reported as an Error carrying a code the
/// CLI maps onto exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) throw Error(code, what);
}

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace openchain
