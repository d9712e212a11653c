#include "epiident/derivative_chain.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "epiident/errors.hpp"

namespace epiident {
namespace {

void check_order(int max_order) {
  if (max_order < 0 || max_order > kMaxChainOrder) {
    throw Error(ErrorKind::OrderUnsupported,
                "chain order must lie in [0, " + std::to_string(kMaxChainOrder) + "]");
  }
}

DerivativeChain empty_chain(const Model& model, const Trajectory& traj, int max_order) {
  if (traj.model != model.id()) {
    throw Error(ErrorKind::DimensionMismatch, "trajectory was produced by another model");
  }
  DerivativeChain chain;
  chain.times = traj.times;
  chain.order = max_order;
  for (auto name : model.output_names()) {
    chain.channels.emplace_back(traj.times.size(), max_order + 1);
    chain.channel_names.emplace_back(name);
  }
  chain.one_sided.assign(traj.times.size(), false);
  return chain;
}

}  // namespace

std::vector<Jet> DerivativeChain::jets_at(std::size_t i, int max_order) const {
  const int n = std::min(max_order, order);
  std::vector<Jet> jets;
  jets.reserve(channels.size());
  std::vector<double> d(static_cast<std::size_t>(n) + 1);
  for (const auto& ch : channels) {
    for (int k = 0; k <= n; ++k) d[k] = ch(static_cast<Eigen::Index>(i), k);
    jets.push_back(Jet::from_derivatives(d));
  }
  return jets;
}

std::size_t DerivativeChain::index_of(double t) const {
  const auto it = std::lower_bound(times.begin(), times.end(), t - 1e-9 * std::max(1.0, std::abs(t)));
  if (it == times.end() || std::abs(*it - t) > 1e-9 * std::max(1.0, std::abs(t))) {
    throw Error(ErrorKind::BadArgs, "t=" + std::to_string(t) + " is not on the chain grid");
  }
  return static_cast<std::size_t>(it - times.begin());
}

std::vector<Jet> lie_jets(const Model& model, std::span<const double> x,
                          std::span<const double> theta, int max_order) {
  const std::size_t n = model.state_dim();
  std::vector<Jet> state(n), rate(n);
  for (std::size_t i = 0; i < n; ++i) state[i] = Jet(x[i]).resized(0);
  for (int m = 0; m < max_order; ++m) {
    model.vector_field(std::span<const Jet>(state), theta, std::span<Jet>(rate));
    for (std::size_t i = 0; i < n; ++i) {
      state[i] = state[i].resized(m + 1);
      state[i].set_coeff(m + 1, rate[i].coeff(m) / (m + 1));
    }
  }
  std::vector<Jet> out(model.output_dim());
  model.output(std::span<const Jet>(state), theta, std::span<Jet>(out));
  for (auto& y : out) y = y.resized(max_order);
  return out;
}

DerivativeChain lie_chain(const Model& model, const Trajectory& traj, int max_order) {
  check_order(max_order);
  DerivativeChain chain = empty_chain(model, traj, max_order);
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const auto jets = lie_jets(model, traj.states[i], traj.theta.values, max_order);
    for (std::size_t c = 0; c < jets.size(); ++c) {
      for (int k = 0; k <= max_order; ++k) {
        chain.channels[c](static_cast<Eigen::Index>(i), k) = jets[c].derivative(k);
      }
    }
  }
  return chain;
}

DerivativeChain analytic_chain(const Model& model, const Trajectory& traj, int max_order) {
  check_order(max_order);
  const int seed_order = model.recursion_seed_order();
  if (seed_order < 0) return lie_chain(model, traj, max_order);

  DerivativeChain chain = empty_chain(model, traj, max_order);
  const std::vector<double> sigma = model.r(traj.theta);
  const int top = seed_order + 1;
  std::vector<double> seed(static_cast<std::size_t>(seed_order) + 1);
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    model.recursion_seed(traj.states[i], traj.theta.values, seed);
    Jet y = Jet::from_derivatives(seed);
    if (!model.regression_defined(0, std::span<const Jet>(&y, 1))) {
      throw Error(ErrorKind::OutputNearZero,
                  "output vanishes at t=" + std::to_string(traj.times[i]));
    }
    for (int m = seed_order; m < max_order; ++m) {
      const Jet rhs = model.recursion_top(y, sigma);
      const int j = m + 1 - top;
      y = y.resized(m + 1);
      y.set_coeff(m + 1, rhs.coeff(j) * factorial(j) / factorial(m + 1));
    }
    for (int k = 0; k <= max_order; ++k) {
      chain.channels[0](static_cast<Eigen::Index>(i), k) = y.derivative(k);
    }
  }
  return chain;
}

std::vector<double> fornberg_weights(double x0, std::span<const double> nodes, int m) {
  const int n = static_cast<int>(nodes.size()) - 1;
  std::vector<std::vector<double>> c(nodes.size(), std::vector<double>(m + 1, 0.0));
  double c1 = 1.0;
  double c4 = nodes[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i <= n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = nodes[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = nodes[i] - nodes[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) {
          c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        }
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) w[i] = c[i][m];
  return w;
}

DerivativeChain finite_difference_chain(std::span<const double> values, double h, int max_order,
                                        int accuracy, double t0) {
  check_order(max_order);
  if (!(h > 0.0)) throw Error(ErrorKind::BadArgs, "finite differences need h > 0");
  if (accuracy < 2 || accuracy % 2 != 0) {
    throw Error(ErrorKind::BadArgs, "stencil accuracy must be a positive even integer");
  }
  const std::size_t n = values.size();
  if (n < static_cast<std::size_t>(2 * max_order + 1)) {
    throw Error(ErrorKind::TooFewSamples, "finite differences need at least 2*order+1 samples");
  }

  DerivativeChain chain;
  chain.order = max_order;
  chain.times.resize(n);
  for (std::size_t i = 0; i < n; ++i) chain.times[i] = t0 + static_cast<double>(i) * h;
  chain.channels.emplace_back(n, max_order + 1);
  chain.channel_names.emplace_back("y");
  chain.one_sided.assign(n, false);
  auto& out = chain.channels[0];

  for (std::size_t i = 0; i < n; ++i) out(static_cast<Eigen::Index>(i), 0) = values[i];
  for (int m = 1; m <= max_order; ++m) {
    const std::size_t width =
        std::min<std::size_t>(n, static_cast<std::size_t>(2 * ((m + 1) / 2) - 1 + accuracy));
    const std::size_t half = width / 2;
    std::vector<double> offsets(width);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t first = i >= half ? i - half : 0;
      first = std::min(first, n - width);
      for (std::size_t j = 0; j < width; ++j) {
        offsets[j] = static_cast<double>(first + j) - static_cast<double>(i);
      }
      const auto w = fornberg_weights(0.0, offsets, m);
      double d = 0.0;
      for (std::size_t j = 0; j < width; ++j) d += w[j] * values[first + j];
      out(static_cast<Eigen::Index>(i), m) = d / std::pow(h, m);
      if (first + half != i) chain.one_sided[i] = true;
    }
  }
  return chain;
}

}  // namespace epiident
