#include "epiident/ode_engine.hpp"

#include <cmath>
#include <string>

#include "epiident/errors.hpp"

namespace epiident {
namespace {

constexpr double kMaxSteps = 1e8;

void check_inputs(const Model& model, const ParamVector& theta, const State& x) {
  if (x.size() != model.state_dim()) {
    throw Error(ErrorKind::DimensionMismatch, std::string(model.name()) + " expects " +
                                                  std::to_string(model.state_dim()) + " states");
  }
  model.check_theta(theta);
  for (double v : x) {
    if (!std::isfinite(v)) throw Error(ErrorKind::IntegrationFailure, "non-finite state");
  }
}

void enforce_invariant(const Model& model, const ParamVector& theta, std::span<double> x,
                       double t) {
  for (double& v : x) {
    if (!std::isfinite(v)) {
      throw Error(ErrorKind::IntegrationFailure, "non-finite state at t=" + std::to_string(t));
    }
    if (v < 0.0 && v >= -kClampFloor) v = 0.0;
  }
  if (model.omega_excess(x, theta.values) > kInvariantTolerance) {
    throw Error(ErrorKind::InvariantViolation,
                "state left the invariant set at t=" + std::to_string(t));
  }
}

}  // namespace

std::size_t grid_steps(const GridSpec& grid) {
  if (!(grid.h > 0.0) || !std::isfinite(grid.h) || !std::isfinite(grid.t0) ||
      !std::isfinite(grid.t_max) || !(grid.t_max > grid.t0)) {
    throw Error(ErrorKind::BadArgs, "grid needs h > 0 and t_max > t0");
  }
  const double n = (grid.t_max - grid.t0) / grid.h;
  if (n > kMaxSteps) {
    throw Error(ErrorKind::StepCountOverflow, "grid implies more than 1e8 steps");
  }
  const double rounded = std::round(n);
  if (std::abs(n - rounded) > 1e-9) {
    throw Error(ErrorKind::BadArgs, "(t_max - t0) / h is not an integer");
  }
  return static_cast<std::size_t>(rounded);
}

Trajectory integrate(const Model& model, const ParamVector& theta, const State& x0,
                     const GridSpec& grid) {
  check_inputs(model, theta, x0);
  const std::size_t n = grid_steps(grid);
  if (model.omega_excess(x0, theta.values) > kInvariantTolerance) {
    throw Error(ErrorKind::InvariantViolation, "initial state outside the invariant set");
  }

  Trajectory traj{{}, {}, model.id(), theta};
  traj.times.reserve(n + 1);
  traj.states.reserve(n + 1);
  State x = x0;
  enforce_invariant(model, theta, x, grid.t0);
  traj.times.push_back(grid.t0);
  traj.states.push_back(x);

  Rk4Stepper stepper(x.size());
  auto field = [&](std::span<const double> s, std::span<double> ds) {
    model.vector_field(s, theta.values, ds);
  };
  for (std::size_t i = 1; i <= n; ++i) {
    const double t = grid.t0 + static_cast<double>(i) * grid.h;
    stepper.step(field, x, grid.h);
    enforce_invariant(model, theta, x, t);
    traj.times.push_back(t);
    traj.states.push_back(x);
  }
  return traj;
}

State integrate_backward(const Model& model, const ParamVector& theta, const State& x_at_t,
                         double t_from, const GridSpec& grid) {
  check_inputs(model, theta, x_at_t);
  if (!(grid.h > 0.0) || !(t_from > grid.t0)) {
    throw Error(ErrorKind::BadArgs, "backward integration needs h > 0 and t_from > t0");
  }
  const double span = t_from - grid.t0;
  double n = span / grid.h;
  if (n > kMaxSteps) {
    throw Error(ErrorKind::StepCountOverflow, "backward path implies more than 1e8 steps");
  }
  double remainder = 0.0;
  if (std::abs(n - std::round(n)) <= 1e-9) {
    n = std::round(n);
  } else {
    n = std::floor(n);
    remainder = span - n * grid.h;
  }

  State x = x_at_t;
  Rk4Stepper stepper(x.size());
  auto reversed = [&](std::span<const double> s, std::span<double> ds) {
    model.vector_field(s, theta.values, ds);
    for (double& v : ds) v = -v;
  };
  const auto steps = static_cast<std::size_t>(n);
  for (std::size_t i = 1; i <= steps; ++i) {
    stepper.step(reversed, x, grid.h);
    enforce_invariant(model, theta, x, t_from - static_cast<double>(i) * grid.h);
  }
  if (remainder > 0.0) {
    stepper.step(reversed, x, remainder);
    enforce_invariant(model, theta, x, grid.t0);
  }
  return x;
}

}  // namespace epiident
