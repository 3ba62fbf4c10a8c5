#include "collider/error.hpp"

namespace collider {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParameterOutOfRange: return "ParameterOutOfRange";
    case ErrorCode::ZeroEvidenceMass: return "ZeroEvidenceMass";
    case ErrorCode::UnknownTask: return "UnknownTask";
    case ErrorCode::DegenerateJoint: return "DegenerateJoint";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ConstantVector: return "ConstantVector";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::TemplateSlotUnresolved: return "TemplateSlotUnresolved";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::CacheMiss: return "CacheMiss";
    case ErrorCode::TransportFailure: return "TransportFailure";
    case ErrorCode::NotNumeric: return "NotNumeric";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::StoreCorruption: return "StoreCorruption";
    case ErrorCode::InvalidInput: return "InvalidInput";
  }
  return "Unknown";
}

}  // namespace collider
