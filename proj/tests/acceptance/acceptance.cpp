#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "epiident/calibrator.hpp"
#include "epiident/derivative_chain.hpp"
#include "epiident/discriminator.hpp"
#include "epiident/errors.hpp"
#include "epiident/model.hpp"
#include "epiident/ode_engine.hpp"
#include "epiident/reconstructor.hpp"
#include "fixtures.hpp"
#include "oracle.hpp"

using namespace epiident;
using testing::case1_theta;
using testing::case2_theta;
using testing::case_x0;
using testing::random_draw;
using testing::rel_err;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
  if (!ok) ++failures;
  std::printf("%s %d %s: %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

int wronskian_order(const Model& m) {
  int order = 0;
  for (const auto& b : m.regression_blocks()) order = std::max(order, b.d_prime + static_cast<int>(b.q) - 1);
  for (int k : m.inversion_orders()) order = std::max(order, k);
  return order;
}

double max_abs_diff(const State& a, const State& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

void wronskian_batch() {
  const Model& sirs = model_by_id(ModelId::Sirs);
  const std::vector<double> truth = sirs.r(case1_theta());
  const auto start = Clock::now();
  const DerivativeChain chain = analytic_chain(sirs, integrate(sirs, case1_theta(), case_x0(), {}), wronskian_order(sirs));
  const auto batch = reconstruct_wronskian_batch(sirs, chain, chain.times);
  const double elapsed = seconds_since(start);

  double sigma_err = 0.0, x0_err = 0.0, cond_lo = INFINITY, cond_hi = 0.0;
  std::size_t solved = 0;
  for (const auto& out : batch) {
    if (!out.result) continue;
    ++solved;
    const auto& r = *out.result;
    for (std::size_t l = 0; l < truth.size(); ++l) sigma_err = std::max(sigma_err, rel_err(r.sigma[l], truth[l]));
    x0_err = std::max(x0_err, r.x0_hat ? max_abs_diff(*r.x0_hat, case_x0()) : INFINITY);
    cond_lo = std::min(cond_lo, r.cond_number);
    cond_hi = std::max(cond_hi, r.cond_number);
  }
  const bool ok = chain.size() == 161 && solved == 161 && sigma_err <= 1e-9 && x0_err <= 1e-9 &&
                  cond_lo >= 1e2 && cond_hi <= 1e7 && elapsed < 1.0;
  report(1, "Case 1 Wronskian at every grid time", ok,
         fmt("%zu/%zu solved, max sigma rel err %.3g, max x0 err %.3g, cond [%.3g, %.3g], %.4f s", solved,
             chain.size(), sigma_err, x0_err, cond_lo, cond_hi, elapsed));
}

void parameter_roundtrip() {
  const ModelId ids[] = {ModelId::Sirs, ModelId::SirDemography, ModelId::Sirv, ModelId::SirIncidence,
                         ModelId::SivDemography};
  std::mt19937_64 rng(101);
  std::vector<std::vector<ParamVector>> draws;
  for (ModelId id : ids) {
    const Model& m = model_by_id(id);
    auto& v = draws.emplace_back();
    for (int i = 0; i < 1000; ++i) v.push_back(random_draw(m, rng).theta);
  }
  double worst = 0.0;
  std::size_t failed = 0;
  const auto start = Clock::now();
  for (std::size_t j = 0; j < std::size(ids); ++j) {
    const Model& m = model_by_id(ids[j]);
    for (const auto& theta : draws[j]) {
      try {
        const ParamVector back = m.r_inverse(m.r(theta));
        for (std::size_t i = 0; i < theta.size(); ++i) worst = std::max(worst, rel_err(back[i], theta[i]));
      } catch (const Error&) {
        ++failed;
      }
    }
  }
  const double elapsed = seconds_since(start);
  report(2, "parameter map round trip", failed == 0 && worst <= 1e-12 && elapsed < 1.0,
         fmt("5 models x 1000 draws, %zu raised, max rel err %.3g, %.4f s", failed, worst, elapsed));
}

double regression_misfit(const Model& m, const ParamVector& theta, const State& x0) {
  const Trajectory tr = integrate(m, theta, x0, {});
  const DerivativeChain chain = analytic_chain(m, tr, testing::regression_order(m));
  const std::vector<double> sigma = m.r(theta);
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < chain.size(); ++i) {
    const auto jets = chain.jets_at(i);
    for (std::size_t b = 0; b < m.regression_blocks().size(); ++b) {
      const auto& block = m.regression_blocks()[b];
      const RegressionTerms t = m.regression_terms(b, jets, sigma);
      double rhs = 0.0;
      for (std::size_t l = 0; l < block.q; ++l) rhs += sigma[block.sigma_offset + l] * t.g[l].value();
      worst = std::max(worst, std::abs(t.g0.value() - rhs) / std::max(1.0, std::abs(t.g0.value())));
    }
  }
  return worst;
}

void regression_identity() {
  std::mt19937_64 rng(202);
  std::string detail;
  bool ok = true;
  for (const Model* m : model_catalog()) {
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const auto d = random_draw(*m, rng);
      worst = std::max(worst, regression_misfit(*m, d.theta, d.x0));
    }
    ok = ok && worst <= 1e-8;
    detail += fmt("%s%s %.2g", detail.empty() ? "" : ", ", std::string(m->name()).c_str(), worst);
  }
  report(3, "regression identity", ok, "100 draws per model, worst scaled misfit: " + detail);
}

void calibration() {
  const Model& sir = model_by_id(ModelId::Sir);
  const Trajectory tr = integrate(sir, case2_theta(), case_x0(), {});
  std::vector<double> t, y;
  for (std::size_t i = 0; i < tr.times.size(); i += 32) {
    t.push_back(tr.times[i]);
    y.push_back(sir.output(tr.states[i], case2_theta())[0]);
  }
  CalibrationProblem problem = make_problem(t, y);
  problem.starts = 20;
  problem.seed = 42;

  const auto start = Clock::now();
  const auto results = calibrate(problem);
  const double elapsed = seconds_since(start);

  const std::array<double, 3> target{0.1, 0.25 / 0.3, 0.25 * 0.9};
  std::array<double, 3> combo_lo{INFINITY, INFINITY, INFINITY}, combo_hi{-INFINITY, -INFINITY, -INFINITY};
  std::array<double, 5> theta_lo{}, theta_hi{};
  theta_lo.fill(INFINITY);
  theta_hi.fill(-INFINITY);
  std::size_t fitted = 0, near_target = 0;
  for (const auto& r : results) {
    if (r.objective >= 1e-8) continue;
    ++fitted;
    bool near = r.converged;
    for (std::size_t c = 0; c < 3; ++c) {
      combo_lo[c] = std::min(combo_lo[c], r.combos[c]);
      combo_hi[c] = std::max(combo_hi[c], r.combos[c]);
      near = near && std::abs(r.combos[c] - target[c]) <= 1e-2;
    }
    for (std::size_t p = 0; p < 5; ++p) {
      theta_lo[p] = std::min(theta_lo[p], r.theta_hat[p]);
      theta_hi[p] = std::max(theta_hi[p], r.theta_hat[p]);
    }
    if (near) ++near_target;
  }
  double combo_spread = 0.0;
  for (std::size_t c = 0; c < 3; ++c) combo_spread = std::max(combo_spread, combo_hi[c] - combo_lo[c]);
  const double k_spread = theta_hi[0] - theta_lo[0];
  const double beta_spread = theta_hi[1] - theta_lo[1];
  const double s0_spread = theta_hi[4] - theta_lo[4];
  const bool witness = std::max({k_spread, beta_spread, s0_spread}) > 0.1;
  const bool ok = near_target >= 1 && combo_spread <= 1e-2 && witness && elapsed < 300.0;
  report(4, "Case 2 daily multi-start calibration", ok,
         fmt("%zu/%zu runs below 1e-8 (%zu converged near target), combo spread %.3g, "
             "spread k %.3g beta %.3g S0 %.3g, best objective %.3g, %.2f s",
             fitted, results.size(), near_target, combo_spread, k_spread, beta_spread, s0_spread,
             results.front().objective, elapsed));
}

void discrimination() {
  const TimeWindow window{0.0, 5.0};
  const auto chain_of = [](const Model& m, const ParamVector& theta) {
    return analytic_chain(m, integrate(m, theta, case_x0(), {}), 2);
  };
  const DerivativeChain c1 = chain_of(model_by_id(ModelId::Sirs), case1_theta());
  const DerivativeChain c2 = chain_of(model_by_id(ModelId::Sir), case2_theta());
  const auto a1c1 = discriminate_approach1(c1, window);
  const auto a2c1 = discriminate_approach2(c1, window);
  const auto a1c2 = discriminate_approach1(c2, window);
  const auto a2c2 = discriminate_approach2(c2, window);
  const double mu_err = std::abs(a1c1.sigma[2] - 0.05);
  const bool ok = a1c1.verdict == Verdict::Sirs && a2c1.verdict == Verdict::Sirs &&
                  a1c2.verdict == Verdict::Sir && a2c2.verdict == Verdict::Sir && mu_err <= 1e-6 &&
                  std::abs(a1c2.sigma[0]) <= 1e-8 && std::abs(a1c2.sigma[2]) <= 1e-8;
  report(5, "SIR/SIRS discrimination", ok,
         fmt("Case 1 %s/%s, |sigma3 - mu| %.3g; Case 2 %s/%s, |sigma1| %.3g, |sigma3| %.3g",
             std::string(to_string(a1c1.verdict)).c_str(), std::string(to_string(a2c1.verdict)).c_str(), mu_err,
             std::string(to_string(a1c2.verdict)).c_str(), std::string(to_string(a2c2.verdict)).c_str(),
             std::abs(a1c2.sigma[0]), std::abs(a1c2.sigma[2])));
}

void closeness_bound() {
  try {
    const auto rep = closeness_bound_check(2.5, 1.0, 0.001, {0.9, 0.1}, {0.03125, 25.0, 0.0});
    double worst_ratio = 0.0;
    bool ok = rep.times.size() == 801;
    for (std::size_t i = 0; i < rep.times.size(); ++i) {
      ok = ok && rep.gap[i] <= rep.bound[i];
      if (rep.bound[i] > 0.0) worst_ratio = std::max(worst_ratio, rep.gap[i] / rep.bound[i]);
    }
    report(6, "SIR/SIRS closeness bound", ok,
           fmt("%zu points on [0, 25], L %.6g, max gap %.3g, max gap/bound %.3g", rep.times.size(), rep.lipschitz,
               rep.max_gap, worst_ratio));
  } catch (const Error& e) {
    report(6, "SIR/SIRS closeness bound", false, e.what());
  }
}

double fd_gap(const Model& m, const ParamVector& theta) {
  const Trajectory tr = integrate(m, theta, case_x0(), {});
  const DerivativeChain exact = analytic_chain(m, tr, 3);
  double worst = 0.0;
  std::vector<double> y(exact.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = exact.channels[0](static_cast<Eigen::Index>(i), 0);
  const DerivativeChain fd = finite_difference_chain(y, tr.step(), 3, 8);
  for (int k = 1; k <= 3; ++k) {
    const double scale = exact.channels[0].col(k).cwiseAbs().maxCoeff();
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (fd.one_sided[i]) continue;
      const auto row = static_cast<Eigen::Index>(i);
      const double a = exact.channels[0](row, k);
      worst = std::max(worst, std::abs(fd.channels[0](row, k) - a) / std::max(std::abs(a), 1e-3 * scale));
    }
  }
  return worst;
}

double rk4_ratio(double h) {
  const Model& sirs = model_by_id(ModelId::Sirs);
  const State ref = testing::dopri_integrate(sirs, case1_theta(), case_x0(), 0.0, 5.0);
  const double e1 = max_abs_diff(integrate(sirs, case1_theta(), case_x0(), {h, 5.0, 0.0}).states.back(), ref);
  const double e2 = max_abs_diff(integrate(sirs, case1_theta(), case_x0(), {h / 2, 5.0, 0.0}).states.back(), ref);
  return e1 / e2;
}

void derivative_oracle() {
  const double g1 = fd_gap(model_by_id(ModelId::Sirs), case1_theta());
  const double g2 = fd_gap(model_by_id(ModelId::Sir), case2_theta());
  const double coarse = rk4_ratio(0.5);
  const double fine = rk4_ratio(0.03125);
  const bool ok = g1 <= 1e-6 && g2 <= 1e-6 && coarse >= 12.0 && coarse <= 20.0;
  report(7, "derivative oracle and RK4 order", ok,
         fmt("orders 1-3 vs central differences: Case 1 %.3g, Case 2 %.3g; RK4 error ratio h 0.5->0.25 %.4g "
             "(h 2^-5->2^-6 %.4g, informational)",
             g1, g2, coarse, fine));
}

void degeneracy() {
  std::mt19937_64 rng(303);
  std::size_t trials = 0, rejected = 0, silent = 0, other = 0;
  std::string first_bad;
  const auto classify = [&](const std::string& label, auto&& fn) {
    ++trials;
    try {
      fn();
      ++silent;
      if (first_bad.empty()) first_bad = label + " returned";
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::SingularEverywhere || e.kind() == ErrorKind::WronskianVanishes) {
        ++rejected;
      } else {
        ++other;
        if (first_bad.empty()) first_bad = label + " raised " + std::string(to_string(e.kind()));
      }
    }
  };
  for (const Model* m : model_catalog()) {
    const int order = wronskian_order(*m);
    for (int i = 0; i < 10; ++i) {
      const ParamVector theta = random_draw(*m, rng).theta;
      const Equilibria eq = m->equilibria(theta);
      std::vector<std::pair<std::string, State>> starts{{"DFE", eq.dfe}};
      if (eq.ee) starts.emplace_back("EE", *eq.ee);
      for (const auto& [tag, x0] : starts) {
        const DerivativeChain chain = lie_chain(*m, integrate(*m, theta, x0, {}), order);
        const std::string label = std::string(m->name()) + " " + tag;
        classify(label + " multi-time", [&] { reconstruct_multitime(*m, chain, {0.0, 5.0}); });
        for (double t : {0.0, 1.0, 2.5, 4.0}) {
          classify(label + " Wronskian", [&] { reconstruct_wronskian(*m, chain, t); });
        }
      }
    }
  }
  report(8, "equilibrium data is rejected", silent == 0 && other == 0,
         fmt("%zu/%zu trials rejected, %zu returned an estimate, %zu other errors%s%s", rejected, trials, silent,
             other, first_bad.empty() ? "" : "; first: ", first_bad.c_str()));
}

}  // namespace

int main() {
  wronskian_batch();
  parameter_roundtrip();
  regression_identity();
  calibration();
  discrimination();
  closeness_bound();
  derivative_oracle();
  degeneracy();
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
