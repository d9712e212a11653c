#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "epiident/jet.hpp"
#include "epiident/model.hpp"
#include "epiident/ode_engine.hpp"

namespace epiident {

inline constexpr int kMaxChainOrder = 8;

struct DerivativeChain {
  std::vector<double> times;
  int order = 0;
  // channels[c](i, k) is the k-th derivative of output c at times[i].
  std::vector<Eigen::MatrixXd> channels;
  std::vector<std::string> channel_names;
  // Set for finite-difference points computed with a shifted stencil.
  std::vector<bool> one_sided;

  std::size_t size() const { return times.size(); }
  std::size_t channel_count() const { return channels.size(); }
  double step() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }

  // Taylor series of every output at times[i], truncated to the given order.
  std::vector<Jet> jets_at(std::size_t i, int max_order) const;
  std::vector<Jet> jets_at(std::size_t i) const { return jets_at(i, order); }
  // Grid index of t; throws BadArgs when t is not on the grid.
  std::size_t index_of(double t) const;
};

// Uses the model's closed-form recursion when it has one, otherwise lie_chain.
DerivativeChain analytic_chain(const Model& model, const Trajectory& traj, int max_order);

// Output derivatives from the Taylor series of the state along the vector field.
DerivativeChain lie_chain(const Model& model, const Trajectory& traj, int max_order);

// Output jets at a single state.
std::vector<Jet> lie_jets(const Model& model, std::span<const double> x,
                          std::span<const double> theta, int max_order);

// Weights of the m-th derivative at x0 over the given nodes.
std::vector<double> fornberg_weights(double x0, std::span<const double> nodes, int m);

// Uniformly sampled values; accuracy is the even truncation order of the central stencils.
DerivativeChain finite_difference_chain(std::span<const double> values, double h, int max_order,
                                        int accuracy = 2, double t0 = 0.0);

}  // namespace epiident
