#pragma once

#include <cmath>
#include <string>

#include "epiident/errors.hpp"
#include "epiident/model.hpp"

namespace epiident::detail {

template <class Derived>
class ModelBase : public Model {
 public:
  void vector_field(std::span<const double> x, std::span<const double> theta,
                    std::span<double> dx) const override {
    self().template field<double>(x, theta, dx);
  }
  void vector_field(std::span<const Jet> x, std::span<const double> theta,
                    std::span<Jet> dx) const override {
    self().template field<Jet>(x, theta, dx);
  }
  void output(std::span<const double> x, std::span<const double> theta,
              std::span<double> y) const override {
    self().template observe<double>(x, theta, y);
  }
  void output(std::span<const Jet> x, std::span<const double> theta,
              std::span<Jet> y) const override {
    self().template observe<Jet>(x, theta, y);
  }

 private:
  const Derived& self() const { return static_cast<const Derived&>(*this); }
};

inline void require_nonzero(double v, const char* what) {
  if (!(std::abs(v) > kOutputFloor)) {
    throw Error(ErrorKind::SigmaDegenerate, std::string(what) + " is numerically zero");
  }
}

inline void require_output(double v, const char* what) {
  if (!(std::abs(v) > kOutputFloor)) {
    throw Error(ErrorKind::OutputNearZero, std::string(what) + " is below the division floor");
  }
}

inline double simplex_excess(std::span<const double> x, double total) {
  double excess = -total;
  double worst = 0.0;
  for (double v : x) {
    excess += v;
    worst = std::max(worst, -v);
  }
  return std::max(worst, excess);
}

const Model& sirs_model();
const Model& sirs_extended_model();
const Model& sir_model();
const Model& sir_demography_model();
const Model& sirv_model();
const Model& sir_incidence_model();
const Model& siv_demography_model();
const Model& sir_scaled_model();

}  // namespace epiident::detail
