#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <variant>

#include "epiident/derivative_chain.hpp"
#include "epiident/errors.hpp"
#include "epiident/reconstructor.hpp"
#include "fixtures.hpp"

using namespace epiident;
using testing::case1_theta;
using testing::case2_theta;
using testing::case_x0;
using testing::rel_err;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::BadArgs;
}

int chain_order_for(const Model& m, bool wronskian) {
  int order = 0;
  for (const auto& b : m.regression_blocks()) {
    order = std::max(order, wronskian ? b.d_prime + static_cast<int>(b.q) - 1 : b.d_prime);
  }
  for (int k : m.inversion_orders()) order = std::max(order, k);
  return order;
}

DerivativeChain exact_chain(const Model& m, const ParamVector& theta, const State& x0, bool wronskian) {
  return analytic_chain(m, integrate(m, theta, x0, {}), chain_order_for(m, wronskian));
}

DerivativeChain case1_chain() {
  return exact_chain(model_by_id(ModelId::Sirs), case1_theta(), case_x0(), true);
}

DerivativeChain case2_ext_chain() {
  const Trajectory tr = integrate(model_by_id(ModelId::Sir), case2_theta(), case_x0(), {});
  const DerivativeChain sir = analytic_chain(model_by_id(ModelId::Sir), tr, 5);
  return sir;
}

const ParamVector& full(const ThetaEstimate& t) { return std::get<ParamVector>(t); }

double max_rel(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, rel_err(a[i], b[i]));
  return m;
}

}  // namespace

TEST_CASE("multi-time time selection on Case 1") {
  const Model& sirs = model_by_id(ModelId::Sirs);
  const DerivativeChain chain = case1_chain();
  const auto times = select_times_multitime(sirs, chain, {0.0, 5.0});
  REQUIRE(times.size() == 1);
  REQUIRE(times[0].size() == 4);
  CHECK(std::is_sorted(times[0].begin(), times[0].end()));
  for (double t : times[0]) {
    CHECK(t >= 0.0);
    CHECK(t < 5.0);
  }
  const SigmaSolution sol = solve_multitime(sirs, chain, times);
  REQUIRE(sol.blocks.size() == 1);
  CHECK(std::abs(sol.blocks[0].det) > 1e-300);
  CHECK(sol.blocks[0].cond >= 1e3);
  CHECK(sol.blocks[0].cond <= 5e5);
  CHECK(sol.blocks[0].relative_residual <= 1e-8);
  CHECK(max_rel(sol.sigma, sirs.r(case1_theta())) <= 1e-9);
  CHECK(select_times_multitime(sirs, chain, {0.0, 5.0}) == times);
}

TEST_CASE("multi-time on SIR data through the extended regression") {
  const Model& ext = model_by_id(ModelId::SirsExtended);
  const DerivativeChain chain = case2_ext_chain();
  const SigmaSolution sol = solve_multitime(ext, chain, select_times_multitime(ext, chain, {0.0, 5.0}));
  CHECK(std::abs(sol.sigma[0]) <= 1e-8);
  CHECK(std::abs(sol.sigma[2]) <= 1e-8);
  CHECK(sol.sigma[1] == doctest::Approx(0.25 * 0.1 / 0.3).epsilon(1e-9));
  CHECK(sol.sigma[3] == doctest::Approx(0.25 / 0.3).epsilon(1e-9));

  const ReconstructionResult res = reconstruct_multitime(ext, chain, {0.0, 5.0});
  const auto& combos = std::get<PartialCombos>(res.theta_hat);
  CHECK(combos.gamma == doctest::Approx(0.1).epsilon(1e-9));
  CHECK(combos.beta_over_k == doctest::Approx(0.25 / 0.3).epsilon(1e-9));
  REQUIRE(combos.beta_S0.has_value());
  CHECK(*combos.beta_S0 == doctest::Approx(0.225).epsilon(1e-8));
  CHECK(*combos.k_I0 == doctest::Approx(0.03).epsilon(1e-8));
  CHECK_FALSE(res.x0_hat.has_value());
}

TEST_CASE("Wronskian at every Case 1 grid time") {
  const Model& sirs = model_by_id(ModelId::Sirs);
  const DerivativeChain chain = case1_chain();
  const auto sigma = sirs.r(case1_theta());
  int ok = 0;
  for (double t : chain.times) {
    const SigmaSolution sol = solve_wronskian(sirs, chain, t);
    CHECK(max_rel(sol.sigma, sigma) <= 1e-9);
    CHECK(sol.blocks[0].cond >= 1e3);
    CHECK(sol.blocks[0].cond <= 5e5);
    CHECK(std::abs(sol.blocks[0].det) < 1e-15);
    ok += sol.blocks[0].trusted ? 1 : 0;
  }
  CHECK(ok >= static_cast<int>(0.99 * static_cast<double>(chain.size())));
}

TEST_CASE("Wronskian rows match differences of the regressor series") {
  const Model& sirs = model_by_id(ModelId::Sirs);
  const DerivativeChain chain = case1_chain();
  const std::size_t n = chain.size();
  std::vector<std::vector<double>> series(5, std::vector<double>(n));
  std::vector<RegressionTerms> terms;
  for (std::size_t i = 0; i < n; ++i) {
    terms.push_back(sirs.regression_terms(0, chain.jets_at(i), {}));
    series[0][i] = terms.back().g0.value();
    for (std::size_t l = 0; l < 4; ++l) series[l + 1][i] = terms.back().g[l].value();
  }
  for (std::size_t l = 0; l < 5; ++l) {
    const DerivativeChain fd = finite_difference_chain(series[l], chain.step(), 3, 8);
    for (int k = 1; k <= 3; ++k) {
      double scale = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const Jet& j = l == 0 ? terms[i].g0 : terms[i].g[l - 1];
        scale = std::max(scale, std::abs(j.derivative(k)));
      }
      for (std::size_t i = 0; i < n; ++i) {
        if (fd.one_sided[i]) continue;
        const Jet& j = l == 0 ? terms[i].g0 : terms[i].g[l - 1];
        const double a = j.derivative(k);
        const double gap = std::abs(fd.channels[0](static_cast<Eigen::Index>(i), k) - a);
        CHECK(gap <= 1e-5 * std::max(std::abs(a), 1e-3 * scale));
      }
    }
  }
}

TEST_CASE("parameter recovery dispatch") {
  const Model& sirs = model_by_id(ModelId::Sirs);
  const Model& ext = model_by_id(ModelId::SirsExtended);
  const std::vector<double> s1{-0.0075, 0.125, 0.05, 0.25 / 0.3};
  const ParamVector th = full(recover_theta(s1, sirs));
  CHECK(max_rel(th.values, case1_theta().values) <= 1e-14);
  CHECK(full(recover_theta(s1, ext)).model == ModelId::SirsExtended);

  const std::vector<double> s2{0.0, 0.25 * 0.1 / 0.3, 0.0, 0.25 / 0.3};
  const auto combos = std::get<PartialCombos>(recover_theta(s2, ext));
  CHECK(combos.gamma == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(combos.beta_over_k == doctest::Approx(0.25 / 0.3).epsilon(1e-14));

  CHECK(kind_of([&] { recover_theta(std::vector<double>{0.01, 0.1, 0.0, 0.8}, ext); }) ==
        ErrorKind::SigmaDegenerate);
  CHECK(std::holds_alternative<PartialCombos>(
      recover_theta(std::vector<double>{0.25 * 0.1 / 0.3, 0.25 / 0.3}, model_by_id(ModelId::Sir))));
}

TEST_CASE("SIR combinations") {
  const std::vector<double> sigma{0.25 * 0.1 / 0.3, 0.25 / 0.3};
  const PartialCombos c = sir_combos(sigma, 0.03, 0.00375);
  CHECK(c.gamma == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(c.beta_over_k == doctest::Approx(0.25 / 0.3).epsilon(1e-14));
  CHECK(*c.beta_S0 == doctest::Approx(0.225).epsilon(1e-14));
  CHECK(*c.k_I0 == 0.03);
  CHECK(c.in_box);

  const PartialCombos zero = sir_combos(std::vector<double>{0.0, 0.8}, 0.03, 0.00375);
  CHECK(zero.gamma == 0.0);
  CHECK_FALSE(zero.in_box);
  CHECK(kind_of([&] { sir_combos(std::vector<double>{0.1, 0.0}, 0.03, 0.0); }) ==
        ErrorKind::SigmaDegenerate);
  CHECK(kind_of([&] { sir_combos(sigma, 0.0, 0.0); }) == ErrorKind::OutputNearZero);

  const DerivativeChain chain = case2_ext_chain();
  const std::size_t a = chain.index_of(1.0);
  const PartialCombos back = sir_combos_at(sigma, chain.channels[0](static_cast<Eigen::Index>(a), 0),
                                           chain.channels[0](static_cast<Eigen::Index>(a), 1), 1.0, {});
  CHECK(back.backward_integrated);
  CHECK(std::abs(*back.beta_S0 - 0.225) <= 1e-8);
  CHECK(std::abs(*back.k_I0 - 0.03) <= 1e-8);
}

TEST_CASE("initial state recovery") {
  const Model& sirs = model_by_id(ModelId::Sirs);
  const DerivativeChain chain = case1_chain();
  const ThetaEstimate th = case1_theta();
  const State at0 = std::get<State>(recover_x0(chain, th, sirs, 0.0, {}));
  CHECK(std::abs(at0[0] - 0.9) <= 1e-9);
  CHECK(std::abs(at0[1] - 0.1) <= 1e-9);
  const State at2 = std::get<State>(recover_x0(chain, th, sirs, 2.0, {}));
  CHECK(std::abs(at2[0] - 0.9) <= 1e-7);
  CHECK(std::abs(at2[1] - 0.1) <= 1e-7);

  const Model& ext = model_by_id(ModelId::SirsExtended);
  const DerivativeChain sir_chain = case2_ext_chain();
  const ThetaEstimate combos = recover_theta(std::vector<double>{0.0, 0.25 * 0.1 / 0.3, 0.0, 0.25 / 0.3}, ext);
  REQUIRE(std::holds_alternative<PartialCombos>(combos));
  const auto c = std::get<PartialCombos>(recover_x0(sir_chain, combos, ext, 0.0, {}));
  CHECK(std::abs(*c.beta_S0 - 0.225) <= 1e-8);
  CHECK(std::abs(*c.k_I0 - 0.03) <= 1e-8);
}

TEST_CASE("Wronskian reconstruction of Case 1 away from the origin") {
  const Model& sirs = model_by_id(ModelId::Sirs);
  const ReconstructionResult res = reconstruct_wronskian(sirs, case1_chain(), 1.0);
  CHECK(res.method == Method::Wronskian);
  CHECK(max_rel(full(res.theta_hat).values, case1_theta().values) <= 1e-9);
  REQUIRE(res.x0_hat.has_value());
  CHECK(std::abs((*res.x0_hat)[0] - 0.9) <= 1e-9);
  CHECK(std::abs((*res.x0_hat)[1] - 0.1) <= 1e-9);
  CHECK(res.t_inversion == 1.0);
  CHECK(res.trusted);
  CHECK(res.theta_in_box);
  CHECK(res.cond_number >= 1.0);
}

struct RecoveryStats {
  double worst = 0.0;
  // Largest error divided by the normalized condition number of the solve.
  double worst_per_cond = 0.0;
  int rejected = 0;
};

RecoveryStats joint_recovery(const Model& m, std::mt19937_64& rng) {
  RecoveryStats st;
  for (int i = 0; i < 50; ++i) {
    const auto d = testing::random_draw(m, rng);
    const DerivativeChain chain = exact_chain(m, d.theta, d.x0, false);
    ReconstructionResult res;
    try {
      res = reconstruct_multitime(m, chain, {0.0, 5.0});
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::SingularEverywhere);
      ++st.rejected;
      continue;
    }
    double err = max_rel(full(res.theta_hat).values, d.theta.values);
    for (std::size_t c = 0; c < d.x0.size(); ++c) {
      err = std::max(err, std::abs((*res.x0_hat)[c] - d.x0[c]) / std::max(1.0, std::abs(d.x0[c])));
    }
    st.worst = std::max(st.worst, err);
    st.worst_per_cond = std::max(st.worst_per_cond, err / res.cond_number);
  }
  return st;
}

TEST_CASE("joint recovery on random draws") {
  std::mt19937_64 rng(31);
  for (ModelId id : {ModelId::Sirs, ModelId::SirDemography, ModelId::Sirv}) {
    const RecoveryStats st = joint_recovery(model_by_id(id), rng);
    CHECK_MESSAGE(st.worst <= 1e-6, model_name(id), " worst ", st.worst);
    CHECK(st.rejected == 0);
  }
}

// Six and five regressors over five days give normalized condition numbers of 1e11 to 1e14,
// so double-precision data cannot always reach the 1e-6 target.
TEST_CASE("joint recovery on the incidence and SIV models" * doctest::may_fail()) {
  std::mt19937_64 rng(41);
  for (ModelId id : {ModelId::SirIncidence, ModelId::SivDemography}) {
    const RecoveryStats st = joint_recovery(model_by_id(id), rng);
    CHECK_MESSAGE(st.worst <= 1e-6, model_name(id), " worst ", st.worst);
    CHECK_MESSAGE(st.rejected == 0, model_name(id), " rejected ", st.rejected);
  }
}

TEST_CASE("recovery error stays within the conditioning bound") {
  std::mt19937_64 rng(43);
  for (const Model* m : model_catalog()) {
    if (!m->fully_identifiable() || m->id() == ModelId::SirsExtended) continue;
    const RecoveryStats st = joint_recovery(*m, rng);
    CHECK_MESSAGE(st.worst_per_cond <= 1e-14, m->name(), " error/cond ", st.worst_per_cond);
  }
}

void check_agreement(std::span<const ModelId> ids, std::mt19937_64& rng) {
  for (ModelId id : ids) {
    const Model& m = model_by_id(id);
    for (int i = 0; i < 5; ++i) {
      const auto d = testing::random_draw(m, rng);
      const DerivativeChain chain = exact_chain(m, d.theta, d.x0, true);
      const SigmaSolution a = solve_multitime(m, chain, select_times_multitime(m, chain, {0.0, 5.0}));
      const SigmaSolution b = solve_wronskian(m, chain, 2.0);
      double cond = 0.0;
      for (const auto& blk : a.blocks) cond = std::max(cond, blk.cond);
      CHECK_MESSAGE(max_rel(a.sigma, b.sigma) <= 1e-8, m.name(), " cond ", cond);
    }
  }
}

TEST_CASE("multi-time and Wronskian agree") {
  std::mt19937_64 rng(37);
  const std::array ids{ModelId::Sirs, ModelId::Sir, ModelId::SirDemography, ModelId::Sirv};
  check_agreement(ids, rng);
}

TEST_CASE("multi-time and Wronskian agree on the incidence and SIV models" * doctest::may_fail()) {
  std::mt19937_64 rng(39);
  const std::array ids{ModelId::SirIncidence, ModelId::SivDemography};
  check_agreement(ids, rng);
}

TEST_CASE("equilibrium data is rejected") {
  const Model& sirs = model_by_id(ModelId::Sirs);
  const State ee = *sirs.equilibria(case1_theta()).ee;
  const DerivativeChain flat = analytic_chain(sirs, integrate(sirs, case1_theta(), ee, {}), 5);
  CHECK(kind_of([&] { select_times_multitime(sirs, flat, {0.0, 5.0}); }) == ErrorKind::SingularEverywhere);
  CHECK(kind_of([&] { reconstruct_wronskian(sirs, flat, 1.0); }) == ErrorKind::WronskianVanishes);

  const DerivativeChain dfe = lie_chain(sirs, integrate(sirs, case1_theta(), {1.0, 0.0}, {}), 5);
  CHECK(kind_of([&] { reconstruct_multitime(sirs, dfe, {0.0, 5.0}); }) == ErrorKind::SingularEverywhere);
  CHECK(kind_of([&] { reconstruct_wronskian(sirs, dfe, 0.0); }) == ErrorKind::WronskianVanishes);
}

TEST_CASE("argument errors") {
  const Model& sirs = model_by_id(ModelId::Sirs);
  const DerivativeChain chain = case1_chain();
  CHECK(kind_of([&] { reconstruct_multitime(sirs, chain, {3.0, 1.0}); }) == ErrorKind::BadArgs);
  CHECK(kind_of([&] { reconstruct_multitime(sirs, chain, {0.0, 0.05}); }) == ErrorKind::TooFewSamples);
  CHECK(kind_of([&] { reconstruct_wronskian(sirs, chain, 0.3); }) == ErrorKind::BadArgs);
  const DerivativeChain short_chain = exact_chain(sirs, case1_theta(), case_x0(), false);
  CHECK(kind_of([&] { solve_wronskian(sirs, short_chain, 1.0); }) == ErrorKind::OrderUnsupported);
  CHECK(kind_of([&] { solve_multitime(sirs, chain, {{0.0, 1.0}}); }) == ErrorKind::DimensionMismatch);
}

TEST_CASE("batch results come back in grid order regardless of threads") {
  const Model& sirs = model_by_id(ModelId::Sirs);
  const DerivativeChain chain = case1_chain();
  const auto serial = reconstruct_wronskian_batch(sirs, chain, chain.times, {}, 1);
  const auto parallel = reconstruct_wronskian_batch(sirs, chain, chain.times, {}, 4);
  REQUIRE(serial.size() == chain.size());
  REQUIRE(parallel.size() == chain.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].t_tilde == chain.times[i]);
    CHECK(parallel[i].t_tilde == chain.times[i]);
    REQUIRE(serial[i].result.has_value());
    REQUIRE(parallel[i].result.has_value());
    CHECK(serial[i].result->sigma == parallel[i].result->sigma);
    CHECK(*serial[i].result->x0_hat == *parallel[i].result->x0_hat);
  }
}

TEST_CASE("SIV reconstruction through both blocks") {
  const Model& siv = model_by_id(ModelId::SivDemography);
  const ParamVector theta{ModelId::SivDemography, {0.1, 0.6, 0.1, 0.05}};
  const DerivativeChain chain = exact_chain(siv, theta, {0.6, 0.2, 0.1}, true);
  const ReconstructionResult mt = reconstruct_multitime(siv, chain, {0.0, 5.0});
  CHECK(mt.blocks.size() == 2);
  CHECK(max_rel(full(mt.theta_hat).values, theta.values) <= 1e-8);
  const ReconstructionResult wr = reconstruct_wronskian(siv, chain, 2.5);
  CHECK(max_rel(full(wr.theta_hat).values, theta.values) <= 1e-8);
  CHECK(std::abs((*wr.x0_hat)[0] - 0.6) <= 1e-8);
}
