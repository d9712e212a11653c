#pragma once

#include <array>
#include <cstddef>
#include <string_view>
#include <vector>

#include "epiident/derivative_chain.hpp"
#include "epiident/ode_engine.hpp"
#include "epiident/reconstructor.hpp"

namespace epiident {

enum class Verdict { Sir, Sirs, Neither };
std::string_view to_string(Verdict verdict);

struct DiscriminationThresholds {
  double tol_sir = kDefaultTolSir;
  double dep_tol = 1e-8;
  // Relative misfit of the extended-SIRS regression above which the data fit neither model.
  double residual_tol = 1e-6;
};

struct Approach1Result {
  Verdict verdict;
  std::vector<double> sigma;
  std::vector<double> times;
  double cond = 0.0;
  double regression_residual = 0.0;
};

struct Approach2Result {
  Verdict verdict;
  double dependence_residual = 0.0;
  std::array<double, 3> singular_values{};
  std::size_t samples = 0;
};

Approach1Result discriminate_approach1(const DerivativeChain& chain, TimeWindow window,
                                       const DiscriminationThresholds& thresholds = {});

Approach2Result discriminate_approach2(const DerivativeChain& chain, TimeWindow window,
                                       const DiscriminationThresholds& thresholds = {});

struct ClosenessReport {
  std::vector<double> times;
  std::vector<State> sir;
  std::vector<State> sirs;
  std::vector<double> gap;
  std::vector<double> bound;
  double lipschitz = 0.0;
  double max_gap = 0.0;
};

// Largest spectral norm of the SIR Jacobian over a triangular grid of the simplex.
double sir_lipschitz_constant(double beta, double gamma, int resolution = 200);

// Throws BoundViolated if the SIR/SIRS gap ever exceeds (mu/L)(exp(L t) - 1).
ClosenessReport closeness_bound_check(double beta, double gamma, double mu, const State& x0,
                                      const GridSpec& grid);

}  // namespace epiident
