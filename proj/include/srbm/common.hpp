#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>
#include <string_view>

namespace srbm {

// Dimension ceiling for every brute-force enumeration in the library.
inline constexpr int kMaxDim = 8;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor,
                          kMaxDim, kMaxDim>;

enum class ErrorCode {
  kDimensionMismatch,
  kNotSpd,
  kNotCompletelyS,
  kNotMMatrix,
  kDriftNotNegative,
  kRecurrenceViolated,
  kInvalidScenario,
  kInvalidConfig,
  kNoSolution,
  kConditionViolated,
  kNoJStar,
  kEmptySet,
  kDegenerateCost,
  kInsufficientSamples,
  kNonPositiveEstimate,
  kParseError,
  kValidationError,
  kIoError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline double l1_sum(const Vec& z) { return z.sum(); }

}  // namespace srbm
