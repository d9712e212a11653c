#include <array>
#include <limits>

#include "model_impl.hpp"

namespace epiident::detail {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::array<std::string_view, 2> kStates{"S", "I"};
constexpr std::array<std::string_view, 1> kOutputs{"y"};
constexpr std::array<ParamBound, 2> kBounds{{
    {"beta", 0.0, kInf, true, true},
    {"gamma", 0.0, kInf, true, true},
}};

// SIR observed through the incidence y = beta S I.
class SirIncidenceModel final : public ModelBase<SirIncidenceModel> {
 public:
  template <class T>
  void field(std::span<const T> x, std::span<const double> th, std::span<T> dx) const {
    const T infection = th[0] * x[0] * x[1];
    dx[0] = -infection;
    dx[1] = infection - th[1] * x[1];
  }

  template <class T>
  void observe(std::span<const T> x, std::span<const double> th, std::span<T> y) const {
    y[0] = th[0] * x[0] * x[1];
  }

  ModelId id() const override { return ModelId::SirIncidence; }
  std::string_view name() const override { return "sir-incidence"; }
  std::span<const std::string_view> state_names() const override { return kStates; }
  std::span<const std::string_view> output_names() const override { return kOutputs; }
  std::span<const ParamBound> param_bounds() const override { return kBounds; }

  double omega_excess(std::span<const double> x, std::span<const double>) const override {
    return simplex_excess(x, 1.0);
  }

  std::span<const RegressionBlock> regression_blocks() const override { return blocks_; }

  // u = d/dt (y'/y)
  RegressionTerms regression_terms(std::size_t, std::span<const Jet> out,
                                   std::span<const double>) const override {
    const Jet& y = out[0];
    require_output(y.value(), "y");
    const Jet yd = y.differentiated();
    const Jet rate = yd / y;
    const Jet u = rate.differentiated();
    return {-(u * u), {rate * u, yd, y, y * u, y * y, u}};
  }

  std::vector<double> r(const ParamVector& th) const override {
    check_theta(th);
    const double beta = th[0], gamma = th[1];
    return {gamma, 2.0 * beta * gamma, beta * gamma * gamma, 4.0 * beta, 4.0 * beta * beta,
            gamma * gamma};
  }

  ParamVector r_inverse(std::span<const double> s) const override {
    require_nonzero(s[0], "sigma_1");
    require_nonzero(s[3], "sigma_4");
    return {id(), {s[3] / 4.0, s[0]}};
  }

  std::vector<int> inversion_orders() const override { return {2}; }

  State state_inversion(std::span<const Jet> out, const ParamVector& th) const override {
    const double beta = th[0], gamma = th[1];
    const double y = out[0].value();
    require_output(y, "y");
    const double rate = out[0].derivative(1) / y;
    const double u = out[0].derivative(2) / y - rate * rate;
    const double infected = u / (beta * gamma) + 2.0 * y / gamma;
    return {rate / beta + infected + gamma / beta, infected};
  }

  Equilibria equilibria(const ParamVector& th) const override {
    return {{1.0, 0.0}, std::nullopt, th[0] / th[1]};
  }

 private:
  std::array<RegressionBlock, 1> blocks_{{{6, 2, 0, {0}}}};
};

}  // namespace

const Model& sir_incidence_model() {
  static const SirIncidenceModel model;
  return model;
}

}  // namespace epiident::detail
