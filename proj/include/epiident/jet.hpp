#pragma once

#include <algorithm>
#include <array>
#include <span>

namespace epiident {

// Truncated Taylor series in normalized form: coeff(k) = f^(k)(t) / k!.
class Jet {
 public:
  static constexpr int kMaxOrder = 10;

  Jet() = default;
  Jet(double constant) { c_[0] = constant; }  // NOLINT(google-explicit-constructor)

  static Jet variable(double value, int order) {
    Jet j;
    j.order_ = order;
    j.c_[0] = value;
    if (order >= 1) j.c_[1] = 1.0;
    return j;
  }

  static Jet from_coefficients(std::span<const double> coeffs) {
    Jet j;
    j.order_ = static_cast<int>(coeffs.size()) - 1;
    std::copy(coeffs.begin(), coeffs.end(), j.c_.begin());
    return j;
  }

  static Jet from_derivatives(std::span<const double> derivs);

  int order() const { return order_; }
  double value() const { return c_[0]; }
  double coeff(int k) const { return c_[k]; }
  void set_coeff(int k, double v) { c_[k] = v; }

  // k-th time derivative f^(k)(t).
  double derivative(int k) const;
  // Series of f'(t); loses one order.
  Jet differentiated() const;
  // Truncates, or extends with zero coefficients.
  Jet resized(int order) const;

  Jet operator-() const {
    Jet r = *this;
    for (int k = 0; k <= order_; ++k) r.c_[k] = -r.c_[k];
    return r;
  }

  friend Jet operator+(const Jet& a, const Jet& b) {
    Jet r;
    r.order_ = std::min(a.order_, b.order_);
    for (int k = 0; k <= r.order_; ++k) r.c_[k] = a.c_[k] + b.c_[k];
    return r;
  }
  friend Jet operator-(const Jet& a, const Jet& b) {
    Jet r;
    r.order_ = std::min(a.order_, b.order_);
    for (int k = 0; k <= r.order_; ++k) r.c_[k] = a.c_[k] - b.c_[k];
    return r;
  }
  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r;
    r.order_ = std::min(a.order_, b.order_);
    for (int k = 0; k <= r.order_; ++k) {
      double s = 0.0;
      for (int j = 0; j <= k; ++j) s += a.c_[j] * b.c_[k - j];
      r.c_[k] = s;
    }
    return r;
  }
  friend Jet operator/(const Jet& a, const Jet& b) {
    Jet r;
    r.order_ = std::min(a.order_, b.order_);
    for (int k = 0; k <= r.order_; ++k) {
      double s = a.c_[k];
      for (int j = 1; j <= k; ++j) s -= b.c_[j] * r.c_[k - j];
      r.c_[k] = s / b.c_[0];
    }
    return r;
  }

  Jet& operator+=(const Jet& b) { return *this = *this + b; }
  Jet& operator-=(const Jet& b) { return *this = *this - b; }
  Jet& operator*=(const Jet& b) { return *this = *this * b; }

 private:
  std::array<double, kMaxOrder + 1> c_{};
  int order_ = kMaxOrder;
};

double factorial(int k);

}  // namespace epiident
