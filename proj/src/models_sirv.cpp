#include <array>
#include <cmath>
#include <limits>

#include "model_impl.hpp"

namespace epiident::detail {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::array<std::string_view, 3> kStates{"S", "I", "V"};
constexpr std::array<std::string_view, 1> kOutputs{"y"};
constexpr std::array<ParamBound, 3> kBounds{{
    {"beta", 0.0, kInf, true, true},
    {"gamma", 0.0, kInf, true, true},
    {"nu", 0.0, kInf, true, true},
}};

// S' = -beta S I - nu S, I' = beta S I - gamma I, V' = nu S, y = nu (1 - V).
class SirvModel final : public ModelBase<SirvModel> {
 public:
  template <class T>
  void field(std::span<const T> x, std::span<const double> th, std::span<T> dx) const {
    const T infection = th[0] * x[0] * x[1];
    dx[0] = -infection - th[2] * x[0];
    dx[1] = infection - th[1] * x[1];
    dx[2] = th[2] * x[0];
  }

  template <class T>
  void observe(std::span<const T> x, std::span<const double> th, std::span<T> y) const {
    y[0] = th[2] * (1.0 - x[2]);
  }

  ModelId id() const override { return ModelId::Sirv; }
  std::string_view name() const override { return "sirv"; }
  std::span<const std::string_view> state_names() const override { return kStates; }
  std::span<const std::string_view> output_names() const override { return kOutputs; }
  std::span<const ParamBound> param_bounds() const override { return kBounds; }

  double omega_excess(std::span<const double> x, std::span<const double>) const override {
    return simplex_excess(x, 1.0);
  }

  std::span<const RegressionBlock> regression_blocks() const override { return blocks_; }

  bool regression_defined(std::size_t, std::span<const Jet> out) const override {
    return std::abs(out[0].derivative(1)) > kOutputFloor;
  }

  RegressionTerms regression_terms(std::size_t, std::span<const Jet> out,
                                   std::span<const double>) const override {
    const Jet yd = out[0].differentiated();
    require_output(yd.value(), "y'");
    const Jet ydd = yd.differentiated();
    const Jet yddd = ydd.differentiated();
    return {yddd - ydd * ydd / yd, {-yd, -(yd * yd), -ydd, -(yd * ydd)}};
  }

  std::vector<double> r(const ParamVector& th) const override {
    check_theta(th);
    const double beta = th[0], gamma = th[1], nu = th[2];
    return {nu * gamma, beta / nu, gamma, beta / (nu * nu)};
  }

  ParamVector r_inverse(std::span<const double> s) const override {
    require_nonzero(s[2], "sigma_3");
    const double gamma = s[2];
    const double nu = s[0] / gamma;
    require_nonzero(nu, "sigma_1");
    return {id(), {s[1] * nu, gamma, nu}};
  }

  std::vector<int> inversion_orders() const override { return {2}; }

  State state_inversion(std::span<const Jet> out, const ParamVector& th) const override {
    const double beta = th[0], nu = th[2];
    const double y = out[0].value();
    const double yd = out[0].derivative(1);
    const double ydd = out[0].derivative(2);
    require_output(yd, "y'");
    return {-yd / (nu * nu), -(ydd / yd + nu) / beta, 1.0 - y / nu};
  }

  Equilibria equilibria(const ParamVector& th) const override {
    return {{0.0, 0.0, 1.0}, std::nullopt, th[0] / th[1]};
  }

  int recursion_seed_order() const override { return 2; }

  void recursion_seed(std::span<const double> x, std::span<const double> th,
                      std::span<double> d) const override {
    const double beta = th[0], nu = th[2];
    d[0] = nu * (1.0 - x[2]);
    d[1] = -nu * nu * x[0];
    d[2] = -d[1] * (beta * x[1] + nu);
  }

  Jet recursion_top(const Jet& y, std::span<const double> s) const override {
    const Jet yd = y.differentiated();
    const Jet ydd = yd.differentiated();
    return ydd * ydd / yd - s[0] * yd - s[1] * (yd * yd) - s[2] * ydd - s[3] * (yd * ydd);
  }

 private:
  std::array<RegressionBlock, 1> blocks_{{{4, 3, 0, {0}}}};
};

}  // namespace

const Model& sirv_model() {
  static const SirvModel model;
  return model;
}

}  // namespace epiident::detail
