#include <array>
#include <limits>

#include "model_impl.hpp"

namespace epiident::detail {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::array<std::string_view, 2> kStates{"S", "I"};
constexpr std::array<std::string_view, 2> kScaledStates{"X", "Y"};
constexpr std::array<std::string_view, 1> kOutputs{"y"};
constexpr std::array<ParamBound, 3> kBounds{{
    {"k", 0.0, 1.0, true, false},
    {"beta", 0.0, kInf, true, true},
    {"gamma", 0.0, kInf, true, true},
}};
constexpr std::array<ParamBound, 2> kScaledBounds{{
    {"gamma", 0.0, kInf, true, true},
    {"beta_over_k", 0.0, kInf, true, true},
}};

// S' = -beta S I, I' = beta S I - gamma I, y = k I.
class SirModel final : public ModelBase<SirModel> {
 public:
  template <class T>
  void field(std::span<const T> x, std::span<const double> th, std::span<T> dx) const {
    const T infection = th[1] * x[0] * x[1];
    dx[0] = -infection;
    dx[1] = infection - th[2] * x[1];
  }

  template <class T>
  void observe(std::span<const T> x, std::span<const double> th, std::span<T> y) const {
    y[0] = th[0] * x[1];
  }

  ModelId id() const override { return ModelId::Sir; }
  std::string_view name() const override { return "sir"; }
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
    return {ydd - yd * yd / y, {-(y * y), -(y * yd)}};
  }

  std::vector<double> r(const ParamVector& th) const override {
    check_theta(th);
    return {th[1] * th[2] / th[0], th[1] / th[0]};
  }

  bool fully_identifiable() const override { return false; }

  ParamVector r_inverse(std::span<const double>) const override {
    throw Error(ErrorKind::SigmaDegenerate,
                "sir parameters are recoverable only as combinations (use combos)");
  }

  std::vector<int> inversion_orders() const override { return {1}; }

  State state_inversion(std::span<const Jet> out, const ParamVector& th) const override {
    const double y = out[0].value();
    require_output(y, "y");
    return {(out[0].derivative(1) / y + th[2]) / th[1], y / th[0]};
  }

  Equilibria equilibria(const ParamVector& th) const override {
    return {{1.0, 0.0}, std::nullopt, th[1] / th[2]};
  }

  int recursion_seed_order() const override { return 1; }

  void recursion_seed(std::span<const double> x, std::span<const double> th,
                      std::span<double> d) const override {
    d[0] = th[0] * x[1];
    d[1] = (th[1] * x[0] - th[2]) * d[0];
  }

  Jet recursion_top(const Jet& y, std::span<const double> s) const override {
    const Jet yd = y.differentiated();
    return yd * yd / y - s[0] * (y * y) - s[1] * (y * yd);
  }

 private:
  std::array<RegressionBlock, 1> blocks_{{{2, 2, 0, {0}}}};
};

// SIR in the identifiable coordinates X = beta S, Y = k I; theta = (gamma, beta/k).
class SirScaledModel final : public ModelBase<SirScaledModel> {
 public:
  template <class T>
  void field(std::span<const T> x, std::span<const double> th, std::span<T> dx) const {
    const T xy = x[0] * x[1];
    dx[0] = -th[1] * xy;
    dx[1] = xy - th[0] * x[1];
  }

  template <class T>
  void observe(std::span<const T> x, std::span<const double>, std::span<T> y) const {
    y[0] = x[1];
  }

  ModelId id() const override { return ModelId::SirScaled; }
  std::string_view name() const override { return "sir-scaled"; }
  std::span<const std::string_view> state_names() const override { return kScaledStates; }
  std::span<const std::string_view> output_names() const override { return kOutputs; }
  std::span<const ParamBound> param_bounds() const override { return kScaledBounds; }

  double omega_excess(std::span<const double> x, std::span<const double>) const override {
    return std::max(-x[0], -x[1]);
  }

  std::span<const RegressionBlock> regression_blocks() const override { return {}; }

  RegressionTerms regression_terms(std::size_t, std::span<const Jet>,
                                   std::span<const double>) const override {
    throw Error(ErrorKind::OrderUnsupported, "sir-scaled carries no regression");
  }

  std::vector<double> r(const ParamVector&) const override { return {}; }
  bool fully_identifiable() const override { return false; }

  ParamVector r_inverse(std::span<const double>) const override {
    throw Error(ErrorKind::SigmaDegenerate, "sir-scaled carries no regression");
  }

  std::vector<int> inversion_orders() const override { return {1}; }

  State state_inversion(std::span<const Jet> out, const ParamVector& th) const override {
    const double y = out[0].value();
    require_output(y, "y");
    return {out[0].derivative(1) / y + th[0], y};
  }

  Equilibria equilibria(const ParamVector&) const override {
    return {{0.0, 0.0}, std::nullopt, 0.0};
  }
};

}  // namespace

const Model& sir_model() {
  static const SirModel model;
  return model;
}

const Model& sir_scaled_model() {
  static const SirScaledModel model;
  return model;
}

}  // namespace epiident::detail
