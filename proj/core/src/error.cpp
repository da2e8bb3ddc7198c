#include "biaslens/error.hpp"

namespace biaslens {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidDistribution: return "InvalidDistribution";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ZeroMassColumn: return "ZeroMassColumn";
    case ErrorCode::ZeroMassRow: return "ZeroMassRow";
    case ErrorCode::SupportMismatch: return "SupportMismatch";
    case ErrorCode::NotBinary: return "NotBinary";
    case ErrorCode::DegenerateMarginal: return "DegenerateMarginal";
    case ErrorCode::UnknownPreset: return "UnknownPreset";
    case ErrorCode::InfeasibleConfig: return "InfeasibleConfig";
    case ErrorCode::InvalidLayout: return "InvalidLayout";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

}  // namespace biaslens
