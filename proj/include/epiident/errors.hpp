#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace epiident {

enum class ErrorKind {
  DimensionMismatch,
  StepCountOverflow,
  InvariantViolation,
  ThetaOutOfBox,
  OutputNearZero,
  SigmaDegenerate,
  OrderUnsupported,
  TooFewSamples,
  SingularEverywhere,
  NumericallySingular,
  WronskianVanishes,
  BoundViolated,
  DegenerateWindow,
  IntegrationFailure,
  InfeasibleInitialInfected,
  AllStartsFailed,
  MethodNeedsDerivatives,
  ApproachesDisagree,
  BadArgs,
  IoError,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace epiident
