#include "conecraft/errors.hpp"

namespace conecraft {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::OutsideCone: return "OUTSIDE_CONE";
    case ErrorCode::DimensionLimit: return "DIMENSION_LIMIT";
    case ErrorCode::DegenerateCone: return "DEGENERATE_CONE";
    case ErrorCode::NoConvergence: return "NO_CONVERGENCE";
    case ErrorCode::StartOutside: return "START_OUTSIDE";
    case ErrorCode::CertLimit: return "CERT_LIMIT";
    case ErrorCode::Horizon: return "HORIZON";
    case ErrorCode::Geometry: return "GEOMETRY";
    case ErrorCode::Incompatible: return "INCOMPATIBLE";
    case ErrorCode::Censoring: return "CENSORING";
    case ErrorCode::Parse: return "PARSE";
    case ErrorCode::Validate: return "VALIDATE";
    case ErrorCode::Precondition: return "PRECONDITION";
    case ErrorCode::Io: return "IO";
  }
  return "UNKNOWN";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace conecraft
