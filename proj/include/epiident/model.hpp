#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "epiident/jet.hpp"

namespace epiident {

using State = std::vector<double>;

enum class ModelId {
  Sirs,
  Sir,
  SirsExtended,
  SirDemography,
  Sirv,
  SirIncidence,
  SivDemography,
  SirScaled,
};

struct ParamVector {
  ModelId model;
  std::vector<double> values;

  double operator[](std::size_t i) const { return values[i]; }
  std::size_t size() const { return values.size(); }
};

// Bounds of one parameter; an open end excludes the bound itself.
struct ParamBound {
  std::string_view name;
  double lo;
  double hi;
  bool lo_open;
  bool hi_open;
};

// Identifiable combinations of the SIR model observed through kI.
struct PartialCombos {
  double gamma = 0.0;
  double beta_over_k = 0.0;
  std::optional<double> beta_S0;
  std::optional<double> k_I0;
  double at_time = 0.0;
  bool backward_integrated = false;
  bool in_box = true;
};

struct RegressionBlock {
  std::size_t q;
  int d_prime;
  std::size_t sigma_offset;
  std::vector<std::size_t> channels;
};

struct RegressionTerms {
  Jet g0;
  std::vector<Jet> g;
};

struct Equilibria {
  State dfe;
  std::optional<State> ee;
  double r0;
};

inline constexpr double kOutputFloor = 1e-14;
inline constexpr double kBoxMargin = 1e-14;

class Model {
 public:
  virtual ~Model() = default;

  virtual ModelId id() const = 0;
  virtual std::string_view name() const = 0;
  virtual std::span<const std::string_view> state_names() const = 0;
  virtual std::span<const std::string_view> output_names() const = 0;
  virtual std::span<const ParamBound> param_bounds() const = 0;

  std::size_t state_dim() const { return state_names().size(); }
  std::size_t output_dim() const { return output_names().size(); }
  std::size_t param_dim() const { return param_bounds().size(); }

  virtual void vector_field(std::span<const double> x, std::span<const double> theta,
                            std::span<double> dx) const = 0;
  virtual void vector_field(std::span<const Jet> x, std::span<const double> theta,
                            std::span<Jet> dx) const = 0;
  virtual void output(std::span<const double> x, std::span<const double> theta,
                      std::span<double> y) const = 0;
  virtual void output(std::span<const Jet> x, std::span<const double> theta,
                      std::span<Jet> y) const = 0;

  State vector_field(const State& x, const ParamVector& theta) const;
  std::vector<double> output(const State& x, const ParamVector& theta) const;

  // Signed distance outside Omega; zero or negative means inside.
  virtual double omega_excess(std::span<const double> x, std::span<const double> theta) const = 0;
  bool in_omega(std::span<const double> x, std::span<const double> theta, double tol) const {
    return omega_excess(x, theta) <= tol;
  }

  bool in_theta_box(std::span<const double> theta) const;
  // Throws DimensionMismatch or ThetaOutOfBox.
  void check_theta(const ParamVector& theta) const;

  virtual std::span<const RegressionBlock> regression_blocks() const = 0;
  std::size_t sigma_dim() const;
  // Whether the block's functionals are defined at this chain point.
  virtual bool regression_defined(std::size_t block, std::span<const Jet> outputs) const;
  // Evaluates g0 and the regressors; sigma holds the blocks solved so far.
  virtual RegressionTerms regression_terms(std::size_t block, std::span<const Jet> outputs,
                                           std::span<const double> sigma) const = 0;
  virtual std::vector<double> r(const ParamVector& theta) const = 0;
  virtual bool fully_identifiable() const { return true; }
  // Throws SigmaDegenerate when sigma lies outside the image of r.
  virtual ParamVector r_inverse(std::span<const double> sigma) const = 0;

  // Highest derivative order per output channel used by the state inversion.
  virtual std::vector<int> inversion_orders() const = 0;
  virtual State state_inversion(std::span<const Jet> outputs, const ParamVector& theta) const = 0;
  virtual Equilibria equilibria(const ParamVector& theta) const = 0;

  // Closed-form output derivatives up to recursion_seed_order(); -1 when absent.
  virtual int recursion_seed_order() const { return -1; }
  virtual void recursion_seed(std::span<const double> x, std::span<const double> theta,
                              std::span<double> derivs) const;
  // y^(d') expressed through the lower derivatives carried by y.
  virtual Jet recursion_top(const Jet& y, std::span<const double> sigma) const;
};

// Models share one instance each; lookups never allocate a new model.
const Model& model_by_id(ModelId id);
const Model& model_by_name(std::string_view name);
std::span<const Model* const> model_catalog();
std::string_view model_name(ModelId id);

}  // namespace epiident
