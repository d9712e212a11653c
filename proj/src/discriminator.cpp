#include "epiident/discriminator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

namespace epiident {
namespace {

constexpr std::size_t kMinApproach2Samples = 10;

std::vector<std::size_t> window_points(const DerivativeChain& chain, TimeWindow window) {
  if (!(window.end > window.begin)) throw Error(ErrorKind::BadArgs, "window needs begin < end");
  const double tol = 1e-9 * std::max(1.0, std::abs(window.end));
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    if (chain.times[i] >= window.begin - tol && chain.times[i] < window.end - tol) idx.push_back(i);
  }
  return idx;
}

}  // namespace

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::Sir: return "SIR";
    case Verdict::Sirs: return "SIRS";
    case Verdict::Neither: return "Neither";
  }
  return "Neither";
}

Approach1Result discriminate_approach1(const DerivativeChain& chain, TimeWindow window,
                                       const DiscriminationThresholds& thresholds) {
  const Model& ext = model_by_id(ModelId::SirsExtended);
  const auto times = select_times_multitime(ext, chain, window);
  const SigmaSolution sol = solve_multitime(ext, chain, times);

  Approach1Result res{Verdict::Sirs, sol.sigma, times.front(), sol.blocks.front().cond, 0.0};
  double misfit = 0.0;
  double scale = 0.0;
  for (std::size_t i : window_points(chain, window)) {
    const auto jets = chain.jets_at(i, 2);
    if (!ext.regression_defined(0, jets)) continue;
    const auto terms = ext.regression_terms(0, jets, sol.sigma);
    double fit = 0.0;
    for (std::size_t l = 0; l < terms.g.size(); ++l) fit += sol.sigma[l] * terms.g[l].value();
    misfit = std::max(misfit, std::abs(terms.g0.value() - fit));
    scale = std::max(scale, std::abs(terms.g0.value()));
  }
  res.regression_residual = scale > 0.0 ? misfit / scale : misfit;

  const bool s1_zero = std::abs(res.sigma[0]) <= thresholds.tol_sir;
  const bool s3_zero = std::abs(res.sigma[2]) <= thresholds.tol_sir;
  if (res.regression_residual > thresholds.residual_tol) {
    res.verdict = Verdict::Neither;
  } else if (s1_zero && s3_zero) {
    res.verdict = Verdict::Sir;
  } else if (s3_zero) {
    res.verdict = Verdict::Neither;
  } else {
    res.verdict = Verdict::Sirs;
  }
  return res;
}

Approach2Result discriminate_approach2(const DerivativeChain& chain, TimeWindow window,
                                       const DiscriminationThresholds& thresholds) {
  if (chain.channel_count() != 1 || chain.order < 2) {
    throw Error(ErrorKind::OrderUnsupported, "approach 2 needs a single output chain of order 2");
  }
  const auto idx = window_points(chain, window);
  if (idx.size() < kMinApproach2Samples) {
    throw Error(ErrorKind::TooFewSamples, "approach 2 needs at least 10 window samples");
  }
  const auto& ch = chain.channels[0];
  Eigen::MatrixXd cols(static_cast<Eigen::Index>(idx.size()), 3);
  double ymax = 0.0;
  double ydmax = 0.0;
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto i = static_cast<Eigen::Index>(idx[r]);
    const double y = ch(i, 0), yd = ch(i, 1), ydd = ch(i, 2);
    if (!(std::abs(y) > kOutputFloor)) {
      throw Error(ErrorKind::OutputNearZero,
                  "output vanishes at t=" + std::to_string(chain.times[idx[r]]));
    }
    const auto row = static_cast<Eigen::Index>(r);
    cols(row, 0) = ydd / y - yd * yd / (y * y);
    cols(row, 1) = y;
    cols(row, 2) = yd;
    ymax = std::max(ymax, std::abs(y));
    ydmax = std::max(ydmax, std::abs(yd));
  }
  if (ydmax <= 1e-10 * ymax) {
    throw Error(ErrorKind::DegenerateWindow, "output is constant on the window");
  }
  for (Eigen::Index c = 0; c < 3; ++c) {
    const double n = cols.col(c).norm();
    if (!(n > 0.0)) throw Error(ErrorKind::DegenerateWindow, "a test function vanishes on the window");
    cols.col(c) /= n;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(cols);
  const auto& s = svd.singularValues();
  Approach2Result res;
  res.samples = idx.size();
  for (int k = 0; k < 3; ++k) res.singular_values[static_cast<std::size_t>(k)] = s(k);
  res.dependence_residual = s(2) / s(0);
  res.verdict = res.dependence_residual <= thresholds.dep_tol ? Verdict::Sir : Verdict::Sirs;
  return res;
}

double sir_lipschitz_constant(double beta, double gamma, int resolution) {
  double best = 0.0;
  for (int i = 0; i <= resolution; ++i) {
    for (int j = 0; i + j <= resolution; ++j) {
      const double s = static_cast<double>(i) / resolution;
      const double inf = static_cast<double>(j) / resolution;
      Eigen::Matrix2d jac;
      jac << -beta * inf, -beta * s, beta * inf, beta * s - gamma;
      Eigen::JacobiSVD<Eigen::Matrix2d> svd(jac);
      best = std::max(best, svd.singularValues()(0));
    }
  }
  return best;
}

ClosenessReport closeness_bound_check(double beta, double gamma, double mu, const State& x0,
                                      const GridSpec& grid) {
  if (!(mu >= 0.0)) throw Error(ErrorKind::BadArgs, "mu must be non-negative");
  const Model& sir = model_by_id(ModelId::Sir);
  const Model& sirs = model_by_id(ModelId::SirsExtended);
  const Trajectory a = integrate(sir, {ModelId::Sir, {1.0, beta, gamma}}, x0, grid);
  const Trajectory b = integrate(sirs, {ModelId::SirsExtended, {1.0, beta, gamma, mu}}, x0, grid);

  ClosenessReport rep;
  rep.lipschitz = sir_lipschitz_constant(beta, gamma);
  rep.times = a.times;
  rep.sir = a.states;
  rep.sirs = b.states;
  for (std::size_t i = 0; i < a.times.size(); ++i) {
    const double ds = a.states[i][0] - b.states[i][0];
    const double di = a.states[i][1] - b.states[i][1];
    const double gap = std::hypot(ds, di);
    const double t = a.times[i] - grid.t0;
    const double bound = mu / rep.lipschitz * std::expm1(rep.lipschitz * t);
    rep.gap.push_back(gap);
    rep.bound.push_back(bound);
    rep.max_gap = std::max(rep.max_gap, gap);
    if (gap > bound + 1e-15) {
      throw Error(ErrorKind::BoundViolated,
                  "SIR/SIRS gap exceeds the Lipschitz bound at t=" + std::to_string(a.times[i]));
    }
  }
  return rep;
}

}  // namespace epiident
