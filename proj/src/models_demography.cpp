#include <array>
#include <limits>

#include "model_impl.hpp"

namespace epiident::detail {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::array<std::string_view, 2> kStates{"S", "I"};
constexpr std::array<std::string_view, 1> kOutputs{"y"};
constexpr std::array<ParamBound, 4> kBounds{{
    {"k", 0.0, 1.0, true, false},
    {"beta", 0.0, kInf, true, true},
    {"gamma", 0.0, kInf, true, true},
    {"delta", 0.0, kInf, true, true},
}};

// S' = delta - beta S I - delta S, I' = beta S I - (gamma + delta) I, y = k I.
class SirDemographyModel final : public ModelBase<SirDemographyModel> {
 public:
  template <class T>
  void field(std::span<const T> x, std::span<const double> th, std::span<T> dx) const {
    const T infection = th[1] * x[0] * x[1];
    dx[0] = th[3] - infection - th[3] * x[0];
    dx[1] = infection - (th[2] + th[3]) * x[1];
  }

  template <class T>
  void observe(std::span<const T> x, std::span<const double> th, std::span<T> y) const {
    y[0] = th[0] * x[1];
  }

  ModelId id() const override { return ModelId::SirDemography; }
  std::string_view name() const override { return "sir-demog"; }
  std::span<const std::string_view> state_names() const override { return kStates; }
  std::span<const std::string_view> output_names() const override { return kOutputs; }
  std::span<const ParamBound> param_bounds() const override { return kBounds; }

  double omega_excess(std::span<const double> x, std::span<const double>) const override {
    return simplex_excess(x, 1.0);
  }

  std::span<const RegressionBlock> regression_blocks() const override { return blocks_; }

  RegressionTerms regression_terms(std::size_t, std::span<const Jet> out,
                                   std::span<const double>) const override {
    const Jet& y = out[0];
    require_output(y.value(), "y");
    const Jet yd = y.differentiated();
    const Jet ydd = yd.differentiated();
    return {ydd - yd * yd / y, {y, -(y * y), -yd, -(y * yd)}};
  }

  std::vector<double> r(const ParamVector& th) const override {
    check_theta(th);
    const double k = th[0], beta = th[1], gamma = th[2], delta = th[3];
    return {delta * (beta - gamma - delta), beta / k * (gamma + delta), delta, beta / k};
  }

  ParamVector r_inverse(std::span<const double> s) const override {
    require_nonzero(s[2], "sigma_3");
    require_nonzero(s[3], "sigma_4");
    const double delta = s[2];
    const double gamma = s[1] / s[3] - delta;
    const double beta = s[0] / delta + gamma + delta;
    return {id(), {beta / s[3], beta, gamma, delta}};
  }

  std::vector<int> inversion_orders() const override { return {1}; }

  State state_inversion(std::span<const Jet> out, const ParamVector& th) const override {
    const double y = out[0].value();
    require_output(y, "y");
    return {(out[0].derivative(1) / y + th[2] + th[3]) / th[1], y / th[0]};
  }

  Equilibria equilibria(const ParamVector& th) const override {
    const double beta = th[1], gamma = th[2], delta = th[3];
    Equilibria eq{{1.0, 0.0}, std::nullopt, beta / (gamma + delta)};
    if (eq.r0 > 1.0) eq.ee = State{1.0 / eq.r0, delta * (eq.r0 - 1.0) / beta};
    return eq;
  }

  int recursion_seed_order() const override { return 1; }

  void recursion_seed(std::span<const double> x, std::span<const double> th,
                      std::span<double> d) const override {
    d[0] = th[0] * x[1];
    d[1] = (th[1] * x[0] - th[2] - th[3]) * d[0];
  }

  Jet recursion_top(const Jet& y, std::span<const double> s) const override {
    const Jet yd = y.differentiated();
    return yd * yd / y + s[0] * y - s[1] * (y * y) - s[2] * yd - s[3] * (y * yd);
  }

 private:
  std::array<RegressionBlock, 1> blocks_{{{4, 2, 0, {0}}}};
};

}  // namespace

const Model& sir_demography_model() {
  static const SirDemographyModel model;
  return model;
}

}  // namespace epiident::detail
