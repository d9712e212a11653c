#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include <unistd.h>

namespace epiident::testing {
namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double distance(const State& a, const State& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

Draw candidate(const Model& model, std::mt19937_64& rng) {
  const double i0 = uniform(rng, 0.02, 0.3);
  const double s0 = uniform(rng, 0.3, 0.95 - i0);
  switch (model.id()) {
    case ModelId::Sirs:
      return {{model.id(), {uniform(rng, 0.1, 1.0), uniform(rng, 0.1, 1.0), uniform(rng, 0.05, 0.5),
                            uniform(rng, 0.01, 0.3)}},
              {s0, i0}};
    case ModelId::SirsExtended:
      return {{model.id(), {uniform(rng, 0.1, 1.0), uniform(rng, 0.1, 1.0), uniform(rng, 0.05, 0.5),
                            uniform(rng, 0.0, 0.3)}},
              {s0, i0}};
    case ModelId::Sir:
      return {{model.id(), {uniform(rng, 0.1, 1.0), uniform(rng, 0.1, 1.0), uniform(rng, 0.05, 0.5)}},
              {s0, i0}};
    case ModelId::SirDemography:
      return {{model.id(), {uniform(rng, 0.1, 1.0), uniform(rng, 0.1, 1.0), uniform(rng, 0.05, 0.5),
                            uniform(rng, 0.01, 0.2)}},
              {s0, i0}};
    case ModelId::SirIncidence:
      return {{model.id(), {uniform(rng, 0.1, 1.0), uniform(rng, 0.05, 0.5)}}, {s0, i0}};
    case ModelId::Sirv: {
      const double v0 = uniform(rng, 0.0, 0.95 - s0 - i0);
      return {{model.id(), {uniform(rng, 0.2, 1.0), uniform(rng, 0.05, 0.3), uniform(rng, 0.02, 0.2)}},
              {s0, i0, v0}};
    }
    case ModelId::SivDemography: {
      const double a = uniform(rng, 0.05, 0.2);
      const double delta = uniform(rng, 0.05, 0.3);
      const double total = a / delta;
      const double v0 = uniform(rng, 0.0, 0.95 - s0 - i0);
      return {{model.id(), {a, uniform(rng, 0.2, 1.0), delta, uniform(rng, 0.02, 0.2)}},
              {s0 * total, i0 * total, v0 * total}};
    }
    case ModelId::SirScaled:
      break;
  }
  return {{model.id(), {uniform(rng, 0.05, 0.5), uniform(rng, 0.1, 1.0)}}, {s0, i0}};
}

}  // namespace

Draw random_draw(const Model& model, std::mt19937_64& rng) {
  for (;;) {
    Draw d = candidate(model, rng);
    const Equilibria eq = model.equilibria(d.theta);
    if (distance(d.x0, eq.dfe) < 0.05) continue;
    if (eq.ee && distance(d.x0, *eq.ee) < 0.05) continue;
    return d;
  }
}

int regression_order(const Model& model) {
  int order = 0;
  for (const auto& b : model.regression_blocks()) order = std::max(order, b.d_prime);
  return order;
}

double rel_err(double estimate, double truth) {
  return std::abs(estimate - truth) / std::abs(truth);
}

std::string temp_path(const std::string& stem) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("epiident_test_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return (dir / stem).string();
}

}  // namespace epiident::testing
