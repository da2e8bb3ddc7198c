#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace biaslens {

enum class ErrorCode {
  InvalidDistribution,
  LengthMismatch,
  ZeroMassColumn,
  ZeroMassRow,
  SupportMismatch,
  NotBinary,
  DegenerateMarginal,
  UnknownPreset,
  InfeasibleConfig,
  InvalidLayout,
  InvalidParams,
  DimensionMismatch,
  NonFiniteLoss,
  MissingColumn,
  EmptyFile,
  MalformedRow,
  IoFailure,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; `code()` distinguishes the cause.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace biaslens
