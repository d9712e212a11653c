#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "epiident/ode_engine.hpp"

namespace epiident {

// (k, beta, gamma, mu, S0)
using Theta5 = std::array<double, 5>;

struct CalibrationBounds {
  Theta5 lo;
  Theta5 hi;
};

// k in [min y, 1], beta in [1e-2, 3], gamma in [1e-2, 1], mu in [0, 1], S0 in [0, 1 - 1e-10].
CalibrationBounds default_bounds(std::span<const double> values);

struct CalibrationProblem {
  std::vector<double> times;
  std::vector<double> values;
  double amplification = 1e14;
  CalibrationBounds bounds{};
  double h = 0.03125;
  std::size_t starts = 20;
  std::uint64_t seed = 42;
  std::size_t max_iterations = 500000;
  double step_tolerance = 1e-15;
  double function_tolerance = 1e-17;
  unsigned threads = 0;
  bool record_history = false;
};

CalibrationProblem make_problem(std::vector<double> times, std::vector<double> values);

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t state) : state_(state) {}
  std::uint64_t next();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();

 private:
  std::uint64_t state_;
};

// Generator of start j, independent of how starts are spread over threads.
SplitMix64 start_generator(std::uint64_t seed, std::size_t start_index);

Theta5 start_from_rho(const CalibrationBounds& bounds, const Theta5& rho);
Theta5 random_start(const CalibrationBounds& bounds, SplitMix64& rng);

// Amplified sum of squares; throws ThetaOutOfBox, InfeasibleInitialInfected, IntegrationFailure.
double objective(const CalibrationProblem& problem, const Theta5& theta);

enum class Termination {
  StepTolerance,
  FunctionTolerance,
  ZeroResidual,
  DampingLimit,
  IterationLimit,
};
std::string_view to_string(Termination reason);

struct CalibrationResult {
  std::size_t start_index = 0;
  Theta5 start_point{};
  Theta5 theta_hat{};
  double objective = 0.0;
  // (gamma, beta/k, beta S0)
  std::array<double, 3> combos{};
  std::size_t iterations = 0;
  double elapsed_seconds = 0.0;
  bool converged = false;
  bool feasible = true;
  Termination reason = Termination::IterationLimit;
  std::vector<double> history;
};

// Bounded least squares from one start.
CalibrationResult minimize_from(const CalibrationProblem& problem, const Theta5& start,
                                std::size_t start_index = 0);

// One result per start, sorted by objective; throws AllStartsFailed.
std::vector<CalibrationResult> calibrate(const CalibrationProblem& problem);

}  // namespace epiident
