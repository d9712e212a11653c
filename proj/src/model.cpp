#include <cmath>
#include <string>

#include "epiident/errors.hpp"
#include "epiident/model.hpp"

namespace epiident {

State Model::vector_field(const State& x, const ParamVector& theta) const {
  if (x.size() != state_dim() || theta.size() != param_dim()) {
    throw Error(ErrorKind::DimensionMismatch, "state or parameter dimension mismatch");
  }
  State dx(state_dim());
  vector_field(std::span<const double>(x), std::span<const double>(theta.values), dx);
  return dx;
}

std::vector<double> Model::output(const State& x, const ParamVector& theta) const {
  if (x.size() != state_dim() || theta.size() != param_dim()) {
    throw Error(ErrorKind::DimensionMismatch, "state or parameter dimension mismatch");
  }
  std::vector<double> y(output_dim());
  output(std::span<const double>(x), std::span<const double>(theta.values), y);
  return y;
}

bool Model::in_theta_box(std::span<const double> theta) const {
  const auto bounds = param_bounds();
  if (theta.size() != bounds.size()) return false;
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    const double v = theta[i];
    const auto& b = bounds[i];
    if (!std::isfinite(v)) return false;
    if (b.lo_open ? !(v > b.lo + kBoxMargin) : !(v >= b.lo)) return false;
    if (b.hi_open ? !(v < b.hi - kBoxMargin) : !(v <= b.hi)) return false;
  }
  return true;
}

void Model::check_theta(const ParamVector& theta) const {
  if (theta.size() != param_dim()) {
    throw Error(ErrorKind::DimensionMismatch,
                std::string(name()) + " expects " + std::to_string(param_dim()) + " parameters");
  }
  if (!in_theta_box(theta.values)) {
    throw Error(ErrorKind::ThetaOutOfBox, std::string(name()) + " parameters outside their box");
  }
}

std::size_t Model::sigma_dim() const {
  std::size_t n = 0;
  for (const auto& b : regression_blocks()) n += b.q;
  return n;
}

bool Model::regression_defined(std::size_t block, std::span<const Jet> outputs) const {
  for (std::size_t c : regression_blocks()[block].channels) {
    if (!(std::abs(outputs[c].value()) > kOutputFloor)) return false;
  }
  return true;
}

void Model::recursion_seed(std::span<const double>, std::span<const double>,
                           std::span<double>) const {
  throw Error(ErrorKind::OrderUnsupported,
              std::string(name()) + " has no closed-form derivative recursion");
}

Jet Model::recursion_top(const Jet&, std::span<const double>) const {
  throw Error(ErrorKind::OrderUnsupported,
              std::string(name()) + " has no closed-form derivative recursion");
}

}  // namespace epiident
