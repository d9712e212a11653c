#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "epiident/derivative_chain.hpp"
#include "epiident/errors.hpp"
#include "epiident/model.hpp"
#include "epiident/ode_engine.hpp"

namespace epiident {

// Half-open interval [begin, end) of chain times.
struct TimeWindow {
  double begin;
  double end;
};

enum class Method { MultiTime, Wronskian };
std::string_view to_string(Method method);

inline constexpr double kDefaultTolSir = 1e-7;
inline constexpr double kUntrustedCond = 1e12;

struct BlockSolve {
  std::size_t block;
  std::vector<double> times;
  double det = 0.0;
  double cond = 0.0;
  double relative_residual = 0.0;
  bool trusted = true;
};

struct SigmaSolution {
  std::vector<double> sigma;
  std::vector<BlockSolve> blocks;
};

using ThetaEstimate = std::variant<ParamVector, PartialCombos>;

struct ReconstructOptions {
  double tol_sir = kDefaultTolSir;
  bool recover_state = true;
  // Target time of the backward integration; defaults to the first chain time.
  std::optional<double> t0;
};

struct ReconstructionResult {
  Method method;
  std::vector<double> sigma;
  ThetaEstimate theta_hat;
  std::optional<State> x0_hat;
  std::vector<double> times_used;
  double det_value = 0.0;
  double cond_number = 0.0;
  std::vector<BlockSolve> blocks;
  double t_inversion = 0.0;
  bool trusted = true;
  bool theta_in_box = true;
  double elapsed_seconds = 0.0;
};

// Per block in solve order, q_j grid times maximizing the regressor determinant.
std::vector<std::vector<double>> select_times_multitime(const Model& model,
                                                        const DerivativeChain& chain,
                                                        TimeWindow window);

SigmaSolution solve_multitime(const Model& model, const DerivativeChain& chain,
                              const std::vector<std::vector<double>>& times);

SigmaSolution solve_wronskian(const Model& model, const DerivativeChain& chain, double t_tilde);

ThetaEstimate recover_theta(std::span<const double> sigma, const Model& model,
                            double tol_sir = kDefaultTolSir);

// SIR combinations from sigma = (beta gamma / k, beta / k) and the output at the first time.
PartialCombos sir_combos(std::span<const double> sigma, double y0, double ydot0);
// Same from data starting at a > grid.t0, carried back to grid.t0 in the (beta S, k I) coordinates.
PartialCombos sir_combos_at(std::span<const double> sigma, double y_a, double ydot_a, double a,
                            const GridSpec& grid);

// Full state at grid.t0, or combos carrying beta S0 and k I0 in the SIR regime.
std::variant<State, PartialCombos> recover_x0(const DerivativeChain& chain,
                                              const ThetaEstimate& theta_hat,
                                              const Model& model, double t_tilde,
                                              const GridSpec& grid);

ReconstructionResult reconstruct_multitime(const Model& model, const DerivativeChain& chain,
                                           TimeWindow window,
                                           const ReconstructOptions& options = {});

ReconstructionResult reconstruct_wronskian(const Model& model, const DerivativeChain& chain,
                                           double t_tilde,
                                           const ReconstructOptions& options = {});

struct BatchOutcome {
  double t_tilde;
  std::optional<ReconstructionResult> result;
  std::optional<ErrorKind> error;
  std::string message;
};

// Results come back in the order of times regardless of the thread count.
std::vector<BatchOutcome> reconstruct_wronskian_batch(const Model& model,
                                                      const DerivativeChain& chain,
                                                      std::span<const double> times,
                                                      const ReconstructOptions& options = {},
                                                      unsigned threads = 0);

}  // namespace epiident
