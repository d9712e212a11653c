#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "epiident/model.hpp"

namespace epiident {

struct GridSpec {
  double h = 0.03125;
  double t_max = 5.0;
  double t0 = 0.0;
};

// Validates the grid and returns its step count.
std::size_t grid_steps(const GridSpec& grid);

struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
  ModelId model;
  ParamVector theta;

  double step() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
};

inline constexpr double kClampFloor = 1e-12;
inline constexpr double kInvariantTolerance = 1e-6;

class Rk4Stepper {
 public:
  explicit Rk4Stepper(std::size_t dim) : k1_(dim), k2_(dim), k3_(dim), k4_(dim), tmp_(dim) {}

  // field(x, dx) writes the vector field at x into dx.
  template <class Field>
  void step(Field&& field, std::span<double> x, double h) {
    const std::size_t n = x.size();
    field(std::span<const double>(x), std::span<double>(k1_));
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = x[i] + 0.5 * h * k1_[i];
    field(std::span<const double>(tmp_), std::span<double>(k2_));
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = x[i] + 0.5 * h * k2_[i];
    field(std::span<const double>(tmp_), std::span<double>(k3_));
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = x[i] + h * k3_[i];
    field(std::span<const double>(tmp_), std::span<double>(k4_));
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += h / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
    }
  }

 private:
  std::vector<double> k1_, k2_, k3_, k4_, tmp_;
};

Trajectory integrate(const Model& model, const ParamVector& theta, const State& x0,
                     const GridSpec& grid);

// State at grid.t0 reached by integrating the negated field from t_from.
State integrate_backward(const Model& model, const ParamVector& theta, const State& x_at_t,
                         double t_from, const GridSpec& grid);

}  // namespace epiident
