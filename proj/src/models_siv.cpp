#include <array>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "model_impl.hpp"

namespace epiident::detail {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::array<std::string_view, 3> kStates{"S", "I", "V"};
constexpr std::array<std::string_view, 2> kOutputs{"y1", "y2"};
constexpr std::array<ParamBound, 4> kBounds{{
    {"A", 0.0, kInf, true, true},
    {"beta", 0.0, kInf, true, true},
    {"delta", 0.0, kInf, true, true},
    {"nu", 0.0, kInf, true, true},
}};

constexpr std::size_t kDeathBlock = 0;

// S' = A - beta S I - (nu + delta) S, I' = beta S I - delta I, V' = nu S - delta V,
// y1 = nu (S + I), y2 = delta (S + I + V).
class SivDemographyModel final : public ModelBase<SivDemographyModel> {
 public:
  template <class T>
  void field(std::span<const T> x, std::span<const double> th, std::span<T> dx) const {
    const double a = th[0], beta = th[1], delta = th[2], nu = th[3];
    const T infection = beta * x[0] * x[1];
    dx[0] = a - infection - (nu + delta) * x[0];
    dx[1] = infection - delta * x[1];
    dx[2] = nu * x[0] - delta * x[2];
  }

  template <class T>
  void observe(std::span<const T> x, std::span<const double> th, std::span<T> y) const {
    y[0] = th[3] * (x[0] + x[1]);
    y[1] = th[2] * (x[0] + x[1] + x[2]);
  }

  ModelId id() const override { return ModelId::SivDemography; }
  std::string_view name() const override { return "siv-demog"; }
  std::span<const std::string_view> state_names() const override { return kStates; }
  std::span<const std::string_view> output_names() const override { return kOutputs; }
  std::span<const ParamBound> param_bounds() const override { return kBounds; }

  double omega_excess(std::span<const double> x, std::span<const double> th) const override {
    return simplex_excess(x, th[0] / th[2]);
  }

  // The y2 block is solved first; its delta feeds the y1 block.
  std::span<const RegressionBlock> regression_blocks() const override { return blocks_; }

  bool regression_defined(std::size_t, std::span<const Jet>) const override { return true; }

  RegressionTerms regression_terms(std::size_t block, std::span<const Jet> out,
                                   std::span<const double> sigma) const override {
    if (block == kDeathBlock) {
      const Jet& y2 = out[1];
      return {y2.differentiated(), {Jet(1.0), -y2}};
    }
    const double delta = sigma[6];
    const Jet& y1 = out[0];
    const Jet y1d = y1.differentiated();
    const Jet y1dd = y1d.differentiated();
    const Jet shifted = y1d + delta * y1;
    return {shifted * shifted, {Jet(1.0), y1, y1d, -(y1 * shifted), -y1dd}};
  }

  std::vector<double> r(const ParamVector& th) const override {
    check_theta(th);
    const double a = th[0], beta = th[1], delta = th[2], nu = th[3];
    return {a * nu * nu * (delta * nu - a * beta) / beta,
            nu * (a * nu + 2.0 * a * delta - (delta * nu * nu + delta * delta * nu) / beta),
            nu * (2.0 * a - (nu * nu + 2.0 * delta * nu) / beta),
            nu,
            nu * nu / beta,
            a * delta,
            delta};
  }

  ParamVector r_inverse(std::span<const double> s) const override {
    require_nonzero(s[6], "sigma_2,2");
    require_nonzero(s[4], "sigma_1,5");
    const double delta = s[6];
    const double nu = s[3];
    return {id(), {s[5] / delta, nu * nu / s[4], delta, nu}};
  }

  std::vector<int> inversion_orders() const override { return {1, 0}; }

  State state_inversion(std::span<const Jet> out, const ParamVector& th) const override {
    const double a = th[0], delta = th[2], nu = th[3];
    const double y1 = out[0].value();
    const double y1d = out[0].derivative(1);
    const double y2 = out[1].value();
    const double nu2 = nu * nu;
    return {a / nu - delta * y1 / nu2 - y1d / nu2,
            (nu + delta) / nu2 * y1 - a / nu + y1d / nu2,
            y2 / delta - y1 / nu};
  }

  Equilibria equilibria(const ParamVector& th) const override {
    const double a = th[0], beta = th[1], delta = th[2], nu = th[3];
    const double s_free = a / (nu + delta);
    Equilibria eq{{s_free, 0.0, nu * s_free / delta}, std::nullopt, beta * s_free / delta};
    if (eq.r0 > 1.0) eq.ee = endemic_root(th.values);
    return eq;
  }

 private:
  std::optional<State> endemic_root(std::span<const double> th) const {
    const double scale = th[0] / th[2];
    const std::array<std::array<double, 3>, 4> guesses{{
        {0.3, 0.3, 0.3}, {0.1, 0.6, 0.2}, {0.6, 0.1, 0.2}, {0.2, 0.2, 0.5}}};
    auto residual = [&](const Eigen::Vector3d& x) {
      Eigen::Vector3d f;
      vector_field(std::span<const double>(x.data(), 3), th, std::span<double>(f.data(), 3));
      return f;
    };
    for (const auto& g : guesses) {
      Eigen::Vector3d x(g[0] * scale, g[1] * scale, g[2] * scale);
      Eigen::Vector3d f = residual(x);
      for (int it = 0; it < 100 && f.norm() > 1e-15 * std::max(1.0, th[0]); ++it) {
        Eigen::Matrix3d jac;
        for (int j = 0; j < 3; ++j) {
          const double step = 1e-7 * std::max(1.0, std::abs(x[j]));
          Eigen::Vector3d xp = x, xm = x;
          xp[j] += step;
          xm[j] -= step;
          jac.col(j) = (residual(xp) - residual(xm)) / (2.0 * step);
        }
        const Eigen::Vector3d dx = jac.partialPivLu().solve(-f);
        double lambda = 1.0;
        Eigen::Vector3d trial = x + dx;
        Eigen::Vector3d ft = residual(trial);
        while (ft.norm() > f.norm() && lambda > 1e-6) {
          lambda *= 0.5;
          trial = x + lambda * dx;
          ft = residual(trial);
        }
        x = trial;
        f = ft;
      }
      const bool converged = f.norm() <= 1e-12 * std::max(1.0, th[0]);
      if (converged && x[1] > 1e-10 * scale && x.minCoeff() >= -1e-12) {
        return State{x[0], x[1], x[2]};
      }
    }
    return std::nullopt;
  }

  std::array<RegressionBlock, 2> blocks_{{{2, 1, 5, {1}}, {5, 2, 0, {0}}}};
};

}  // namespace

const Model& siv_demography_model() {
  static const SivDemographyModel model;
  return model;
}

}  // namespace epiident::detail
