#include "epiident/jet.hpp"

namespace epiident {

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

Jet Jet::from_derivatives(std::span<const double> derivs) {
  Jet j;
  j.order_ = static_cast<int>(derivs.size()) - 1;
  for (int k = 0; k <= j.order_; ++k) j.c_[k] = derivs[k] / factorial(k);
  return j;
}

double Jet::derivative(int k) const { return c_[k] * factorial(k); }

Jet Jet::differentiated() const {
  Jet r;
  r.order_ = std::max(order_ - 1, 0);
  for (int k = 0; k < order_; ++k) r.c_[k] = (k + 1) * c_[k + 1];
  if (order_ == 0) r.c_[0] = 0.0;
  return r;
}

Jet Jet::resized(int order) const {
  Jet r = *this;
  for (int k = std::min(order, order_) + 1; k <= kMaxOrder; ++k) r.c_[k] = 0.0;
  r.order_ = order;
  return r;
}

}  // namespace epiident
