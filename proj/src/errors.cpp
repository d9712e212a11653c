#include "epiident/errors.hpp"

namespace epiident {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::StepCountOverflow: return "StepCountOverflow";
    case ErrorKind::InvariantViolation: return "InvariantViolation";
    case ErrorKind::ThetaOutOfBox: return "ThetaOutOfBox";
    case ErrorKind::OutputNearZero: return "OutputNearZero";
    case ErrorKind::SigmaDegenerate: return "SigmaDegenerate";
    case ErrorKind::OrderUnsupported: return "OrderUnsupported";
    case ErrorKind::TooFewSamples: return "TooFewSamples";
    case ErrorKind::SingularEverywhere: return "SingularEverywhere";
    case ErrorKind::NumericallySingular: return "NumericallySingular";
    case ErrorKind::WronskianVanishes: return "WronskianVanishes";
    case ErrorKind::BoundViolated: return "BoundViolated";
    case ErrorKind::DegenerateWindow: return "DegenerateWindow";
    case ErrorKind::IntegrationFailure: return "IntegrationFailure";
    case ErrorKind::InfeasibleInitialInfected: return "InfeasibleInitialInfected";
    case ErrorKind::AllStartsFailed: return "AllStartsFailed";
    case ErrorKind::MethodNeedsDerivatives: return "MethodNeedsDerivatives";
    case ErrorKind::ApproachesDisagree: return "ApproachesDisagree";
    case ErrorKind::BadArgs: return "BadArgs";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

}  // namespace epiident
