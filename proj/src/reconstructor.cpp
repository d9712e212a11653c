#include "epiident/reconstructor.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

#include <Eigen/Dense>

namespace epiident {
namespace {

constexpr double kDetFloor = 1e-300;
constexpr double kStationaryRatio = 1e-10;
constexpr double kSelectionCond = 1e14;

struct LinearRows {
  Eigen::MatrixXd m;
  Eigen::VectorXd b;
};

double elapsed_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double condition_number(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  const double smin = s(s.size() - 1);
  return smin > 0.0 ? s(0) / smin : std::numeric_limits<double>::infinity();
}

void check_chain_order(const Model& model, const DerivativeChain& chain, int needed) {
  if (chain.channel_count() != model.output_dim()) {
    throw Error(ErrorKind::DimensionMismatch, "chain has " +
                                                  std::to_string(chain.channel_count()) +
                                                  " outputs but " + std::string(model.name()) +
                                                  " has " + std::to_string(model.output_dim()));
  }
  if (chain.order < needed) {
    throw Error(ErrorKind::OrderUnsupported, "method needs chain order " + std::to_string(needed) +
                                                 ", chain has " + std::to_string(chain.order));
  }
}

int inversion_order(const Model& model) {
  const auto orders = model.inversion_orders();
  return *std::max_element(orders.begin(), orders.end());
}

// Every derivative up to max_order is negligible next to the value.
bool stationary_at(const DerivativeChain& chain, const RegressionBlock& block, std::size_t i,
                   int max_order) {
  for (std::size_t c : block.channels) {
    const auto& ch = chain.channels[c];
    const double scale = std::abs(ch(static_cast<Eigen::Index>(i), 0));
    for (int k = 1; k <= max_order; ++k) {
      if (std::abs(ch(static_cast<Eigen::Index>(i), k)) > kStationaryRatio * scale) return false;
    }
  }
  return true;
}

LinearRows multitime_rows(const Model& model, const DerivativeChain& chain, std::size_t block,
                          std::span<const std::size_t> indices, std::span<const double> sigma) {
  const auto& blk = model.regression_blocks()[block];
  LinearRows rows{Eigen::MatrixXd(static_cast<Eigen::Index>(indices.size()),
                                  static_cast<Eigen::Index>(blk.q)),
                  Eigen::VectorXd(static_cast<Eigen::Index>(indices.size()))};
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto jets = chain.jets_at(indices[r], blk.d_prime);
    const auto terms = model.regression_terms(block, jets, sigma);
    for (std::size_t l = 0; l < blk.q; ++l) {
      rows.m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(l)) = terms.g[l].value();
    }
    rows.b(static_cast<Eigen::Index>(r)) = terms.g0.value();
  }
  return rows;
}

BlockSolve solve_block(const LinearRows& rows, std::span<double> sigma_out, std::size_t block) {
  BlockSolve out;
  out.block = block;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(rows.m);
  out.det = lu.determinant();
  if (!(std::abs(out.det) > 0.0) || !std::isfinite(out.det)) {
    throw Error(ErrorKind::NumericallySingular, "regression matrix of block " +
                                                    std::to_string(block + 1) +
                                                    " is singular");
  }
  const Eigen::VectorXd x = lu.solve(rows.b);
  if (!x.allFinite()) {
    throw Error(ErrorKind::NumericallySingular, "regression solve produced non-finite values");
  }
  out.cond = condition_number(rows.m);
  const double bnorm = rows.b.lpNorm<Eigen::Infinity>();
  const double rnorm = (rows.m * x - rows.b).lpNorm<Eigen::Infinity>();
  out.relative_residual = bnorm > 0.0 ? rnorm / bnorm : rnorm;
  out.trusted = out.cond <= kUntrustedCond;
  for (Eigen::Index l = 0; l < x.size(); ++l) sigma_out[static_cast<std::size_t>(l)] = x(l);
  return out;
}

double abs_det(const Eigen::MatrixXd& m) { return std::abs(m.partialPivLu().determinant()); }

// Greedy pivoted Gram-Schmidt start, then single-row swaps while |det| grows.
std::vector<std::size_t> max_volume_rows(const Eigen::MatrixXd& a) {
  const auto n = static_cast<std::size_t>(a.rows());
  const auto q = static_cast<std::size_t>(a.cols());
  Eigen::MatrixXd resid = a;
  std::vector<std::size_t> chosen;
  std::vector<bool> used(n, false);
  for (std::size_t j = 0; j < q; ++j) {
    std::size_t best = n;
    double best_norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (used[i]) continue;
      const double nr = resid.row(static_cast<Eigen::Index>(i)).squaredNorm();
      if (nr > best_norm) {
        best_norm = nr;
        best = i;
      }
    }
    if (best == n) break;
    used[best] = true;
    chosen.push_back(best);
    const Eigen::RowVectorXd v =
        resid.row(static_cast<Eigen::Index>(best)) / std::sqrt(best_norm);
    for (std::size_t i = 0; i < n; ++i) {
      if (used[i]) continue;
      auto row = resid.row(static_cast<Eigen::Index>(i));
      row -= row.dot(v) * v;
    }
  }
  if (chosen.size() < q) return chosen;

  auto submatrix = [&](const std::vector<std::size_t>& idx) {
    Eigen::MatrixXd s(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(q));
    for (std::size_t r = 0; r < q; ++r) {
      s.row(static_cast<Eigen::Index>(r)) = a.row(static_cast<Eigen::Index>(idx[r]));
    }
    return s;
  };
  double best_det = abs_det(submatrix(chosen));
  for (int pass = 0; pass < 20; ++pass) {
    bool improved = false;
    for (std::size_t p = 0; p < q; ++p) {
      for (std::size_t i = 0; i < n; ++i) {
        if (used[i]) continue;
        auto trial = chosen;
        trial[p] = i;
        const double d = abs_det(submatrix(trial));
        if (d > best_det * (1.0 + 1e-9)) {
          used[chosen[p]] = false;
          used[i] = true;
          chosen = std::move(trial);
          best_det = d;
          improved = true;
        }
      }
    }
    if (!improved) break;
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

std::vector<std::size_t> window_indices(const DerivativeChain& chain, TimeWindow window) {
  if (!(window.end > window.begin)) {
    throw Error(ErrorKind::BadArgs, "window needs begin < end");
  }
  const double tol = 1e-9 * std::max(1.0, std::abs(window.end));
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const double t = chain.times[i];
    if (t >= window.begin - tol && t < window.end - tol) idx.push_back(i);
  }
  return idx;
}

std::vector<std::size_t> indices_of(const DerivativeChain& chain, std::span<const double> times) {
  std::vector<std::size_t> idx;
  idx.reserve(times.size());
  for (double t : times) idx.push_back(chain.index_of(t));
  return idx;
}

std::vector<std::size_t> select_block(const Model& model, const DerivativeChain& chain,
                                      std::size_t block, std::span<const std::size_t> window,
                                      std::span<const double> sigma) {
  const auto& blk = model.regression_blocks()[block];
  std::vector<std::size_t> admissible;
  bool all_stationary = true;
  for (std::size_t i : window) {
    const auto jets = chain.jets_at(i, blk.d_prime);
    if (!model.regression_defined(block, jets)) continue;
    admissible.push_back(i);
    if (!stationary_at(chain, blk, i, blk.d_prime)) all_stationary = false;
  }
  const std::string label = "block " + std::to_string(block + 1) + ": ";
  if (admissible.size() < blk.q) {
    throw Error(ErrorKind::SingularEverywhere,
                label + "fewer than " + std::to_string(blk.q) +
                    " window times where the regression is defined (output vanishes)");
  }
  if (all_stationary) {
    throw Error(ErrorKind::SingularEverywhere,
                label + "output is stationary on the window, regressors are linearly dependent");
  }

  LinearRows rows = multitime_rows(model, chain, block, admissible, sigma);
  Eigen::VectorXd scale = rows.m.cwiseAbs().colwise().maxCoeff().transpose();
  for (Eigen::Index l = 0; l < scale.size(); ++l) {
    if (!(scale(l) > 0.0)) {
      throw Error(ErrorKind::SingularEverywhere,
                  label + "regressor " + std::to_string(l + 1) + " vanishes on the window");
    }
  }
  const Eigen::MatrixXd normalized = rows.m * scale.cwiseInverse().asDiagonal();
  const auto picked = max_volume_rows(normalized);
  if (picked.size() < blk.q) {
    throw Error(ErrorKind::SingularEverywhere, label + "regressor rows span a deficient space");
  }

  Eigen::MatrixXd sub(static_cast<Eigen::Index>(blk.q), static_cast<Eigen::Index>(blk.q));
  Eigen::MatrixXd raw(static_cast<Eigen::Index>(blk.q), static_cast<Eigen::Index>(blk.q));
  std::vector<std::size_t> chosen;
  for (std::size_t r = 0; r < picked.size(); ++r) {
    sub.row(static_cast<Eigen::Index>(r)) = normalized.row(static_cast<Eigen::Index>(picked[r]));
    raw.row(static_cast<Eigen::Index>(r)) = rows.m.row(static_cast<Eigen::Index>(picked[r]));
    chosen.push_back(admissible[picked[r]]);
  }
  const double cond = condition_number(sub);
  if (!(cond <= kSelectionCond) || !(abs_det(raw) > kDetFloor)) {
    throw Error(ErrorKind::SingularEverywhere,
                label + "no well-conditioned choice of times (condition number " +
                    std::to_string(cond) + ")");
  }
  return chosen;
}

State invert_state_at(const Model& model, const DerivativeChain& chain, std::size_t i,
                      const ParamVector& theta) {
  return model.state_inversion(chain.jets_at(i, inversion_order(model)), theta);
}

GridSpec backward_grid(const DerivativeChain& chain, double t_tilde, double t0) {
  const double h = chain.step();
  if (!(h > 0.0)) throw Error(ErrorKind::BadArgs, "chain needs at least two grid times");
  return {h, t_tilde, t0};
}

void fill_state(ReconstructionResult& res, const Model& model, const DerivativeChain& chain,
                std::size_t index, const ReconstructOptions& options) {
  res.t_inversion = chain.times[index];
  if (!options.recover_state) return;
  const double t0 = options.t0.value_or(chain.times.front());
  const GridSpec grid = backward_grid(chain, res.t_inversion, t0);
  if (const auto* theta = std::get_if<ParamVector>(&res.theta_hat)) {
    if (!res.theta_in_box) return;
    res.x0_hat = std::get<State>(recover_x0(chain, *theta, model, res.t_inversion, grid));
  } else {
    auto& combos = std::get<PartialCombos>(res.theta_hat);
    combos = std::get<PartialCombos>(recover_x0(chain, combos, model, res.t_inversion, grid));
  }
}

void finish(ReconstructionResult& res, const Model& model) {
  res.trusted = std::all_of(res.blocks.begin(), res.blocks.end(),
                            [](const BlockSolve& b) { return b.trusted; });
  if (const auto* theta = std::get_if<ParamVector>(&res.theta_hat)) {
    res.theta_in_box = model.in_theta_box(theta->values);
  } else {
    res.theta_in_box = std::get<PartialCombos>(res.theta_hat).in_box;
  }
  res.det_value = 1.0;
  res.cond_number = 1.0;
  for (const auto& b : res.blocks) {
    res.det_value *= b.det;
    res.cond_number = std::max(res.cond_number, b.cond);
    res.times_used.insert(res.times_used.end(), b.times.begin(), b.times.end());
  }
}

PartialCombos combos_from_ext(std::span<const double> sigma) {
  if (!(std::abs(sigma[3]) > kOutputFloor)) {
    throw Error(ErrorKind::SigmaDegenerate, "sigma_4 is numerically zero");
  }
  PartialCombos c;
  c.gamma = sigma[1] / sigma[3];
  c.beta_over_k = sigma[3];
  c.in_box = c.gamma > 0.0 && c.beta_over_k > 0.0;
  return c;
}

}  // namespace

std::string_view to_string(Method method) {
  return method == Method::MultiTime ? "multitime" : "wronskian";
}

std::vector<std::vector<double>> select_times_multitime(const Model& model,
                                                        const DerivativeChain& chain,
                                                        TimeWindow window) {
  const auto blocks = model.regression_blocks();
  int needed = 0;
  for (const auto& b : blocks) needed = std::max(needed, b.d_prime);
  check_chain_order(model, chain, needed);
  const auto idx = window_indices(chain, window);

  std::vector<double> sigma(model.sigma_dim(), 0.0);
  std::vector<std::vector<double>> times;
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    if (idx.size() < blocks[j].q) {
      throw Error(ErrorKind::TooFewSamples, "window holds " + std::to_string(idx.size()) +
                                                " grid times, block needs " +
                                                std::to_string(blocks[j].q));
    }
    const auto chosen = select_block(model, chain, j, idx, sigma);
    std::vector<double> t;
    for (std::size_t i : chosen) t.push_back(chain.times[i]);
    times.push_back(t);
    if (j + 1 < blocks.size()) {
      const LinearRows rows = multitime_rows(model, chain, j, chosen, sigma);
      solve_block(rows, std::span<double>(sigma).subspan(blocks[j].sigma_offset, blocks[j].q), j);
    }
  }
  return times;
}

SigmaSolution solve_multitime(const Model& model, const DerivativeChain& chain,
                              const std::vector<std::vector<double>>& times) {
  const auto blocks = model.regression_blocks();
  if (times.size() != blocks.size()) {
    throw Error(ErrorKind::DimensionMismatch, "need one time list per regression block");
  }
  int needed = 0;
  for (const auto& b : blocks) needed = std::max(needed, b.d_prime);
  check_chain_order(model, chain, needed);

  SigmaSolution sol{std::vector<double>(model.sigma_dim(), 0.0), {}};
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    if (times[j].size() != blocks[j].q) {
      throw Error(ErrorKind::DimensionMismatch, "block " + std::to_string(j + 1) + " needs " +
                                                    std::to_string(blocks[j].q) + " times");
    }
    const auto idx = indices_of(chain, times[j]);
    for (std::size_t i : idx) {
      if (!model.regression_defined(j, chain.jets_at(i, blocks[j].d_prime))) {
        throw Error(ErrorKind::OutputNearZero,
                    "regression undefined at t=" + std::to_string(chain.times[i]));
      }
    }
    const LinearRows rows = multitime_rows(model, chain, j, idx, sol.sigma);
    BlockSolve bs = solve_block(
        rows, std::span<double>(sol.sigma).subspan(blocks[j].sigma_offset, blocks[j].q), j);
    bs.times = times[j];
    sol.blocks.push_back(std::move(bs));
  }
  return sol;
}

SigmaSolution solve_wronskian(const Model& model, const DerivativeChain& chain, double t_tilde) {
  const auto blocks = model.regression_blocks();
  int needed = 0;
  for (const auto& b : blocks) needed = std::max(needed, b.d_prime + static_cast<int>(b.q) - 1);
  check_chain_order(model, chain, needed);
  const std::size_t i = chain.index_of(t_tilde);

  SigmaSolution sol{std::vector<double>(model.sigma_dim(), 0.0), {}};
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    const auto& blk = blocks[j];
    const int order = blk.d_prime + static_cast<int>(blk.q) - 1;
    const std::string label =
        "block " + std::to_string(j + 1) + " at t=" + std::to_string(chain.times[i]) + ": ";
    const auto jets = chain.jets_at(i, order);
    if (!model.regression_defined(j, jets)) {
      throw Error(ErrorKind::WronskianVanishes, label + "output vanishes, regression undefined");
    }
    if (stationary_at(chain, blk, i, order)) {
      throw Error(ErrorKind::WronskianVanishes, label + "output is stationary");
    }
    const auto terms = model.regression_terms(j, jets, sol.sigma);
    const auto q = static_cast<Eigen::Index>(blk.q);
    LinearRows rows{Eigen::MatrixXd(q, q), Eigen::VectorXd(q)};
    for (Eigen::Index k = 0; k < q; ++k) {
      for (Eigen::Index l = 0; l < q; ++l) {
        rows.m(k, l) = terms.g[static_cast<std::size_t>(l)].derivative(static_cast<int>(k));
      }
      rows.b(k) = terms.g0.derivative(static_cast<int>(k));
    }
    const double det = rows.m.partialPivLu().determinant();
    if (!(std::abs(det) > kDetFloor)) {
      throw Error(ErrorKind::WronskianVanishes, label + "Wronskian determinant vanishes");
    }
    BlockSolve bs =
        solve_block(rows, std::span<double>(sol.sigma).subspan(blk.sigma_offset, blk.q), j);
    bs.times = {chain.times[i]};
    sol.blocks.push_back(std::move(bs));
  }
  return sol;
}

ThetaEstimate recover_theta(std::span<const double> sigma, const Model& model, double tol_sir) {
  if (sigma.size() != model.sigma_dim()) {
    throw Error(ErrorKind::DimensionMismatch, "sigma has the wrong length for " +
                                                  std::string(model.name()));
  }
  for (double s : sigma) {
    if (!std::isfinite(s)) throw Error(ErrorKind::SigmaDegenerate, "sigma is not finite");
  }
  switch (model.id()) {
    case ModelId::SirsExtended: {
      const bool s1_zero = std::abs(sigma[0]) <= tol_sir;
      const bool s3_zero = std::abs(sigma[2]) <= tol_sir;
      if (s1_zero && s3_zero) return combos_from_ext(sigma);
      if (s3_zero) {
        throw Error(ErrorKind::SigmaDegenerate,
                    "sigma_3 vanishes while sigma_1 does not: data match neither SIR nor SIRS");
      }
      return model.r_inverse(sigma);
    }
    case ModelId::Sir: {
      if (!(std::abs(sigma[1]) > kOutputFloor)) {
        throw Error(ErrorKind::SigmaDegenerate, "sigma_2 is numerically zero");
      }
      PartialCombos c;
      c.gamma = sigma[0] / sigma[1];
      c.beta_over_k = sigma[1];
      c.in_box = c.gamma > 0.0 && c.beta_over_k > 0.0;
      return c;
    }
    default:
      return model.r_inverse(sigma);
  }
}

PartialCombos sir_combos(std::span<const double> sigma, double y0, double ydot0) {
  if (!(std::abs(sigma[1]) > kOutputFloor)) {
    throw Error(ErrorKind::SigmaDegenerate, "sigma_2 is numerically zero");
  }
  if (!(std::abs(y0) > kOutputFloor)) {
    throw Error(ErrorKind::OutputNearZero, "y(0) is below the division floor");
  }
  PartialCombos c;
  c.gamma = sigma[0] / sigma[1];
  c.beta_over_k = sigma[1];
  c.beta_S0 = ydot0 / y0 + c.gamma;
  c.k_I0 = y0;
  c.in_box = c.gamma > 0.0 && c.beta_over_k > 0.0 && *c.beta_S0 >= 0.0 && y0 > 0.0;
  return c;
}

PartialCombos sir_combos_at(std::span<const double> sigma, double y_a, double ydot_a, double a,
                            const GridSpec& grid) {
  PartialCombos c = sir_combos(sigma, y_a, ydot_a);
  c.at_time = a;
  if (a > grid.t0) {
    const ParamVector scaled{ModelId::SirScaled, {c.gamma, c.beta_over_k}};
    const State back = integrate_backward(model_by_id(ModelId::SirScaled), scaled,
                                          {*c.beta_S0, *c.k_I0}, a, grid);
    c.beta_S0 = back[0];
    c.k_I0 = back[1];
    c.at_time = grid.t0;
    c.backward_integrated = true;
  }
  return c;
}

std::variant<State, PartialCombos> recover_x0(const DerivativeChain& chain,
                                              const ThetaEstimate& theta_hat,
                                              const Model& model, double t_tilde,
                                              const GridSpec& grid) {
  check_chain_order(model, chain, inversion_order(model));
  const std::size_t i = chain.index_of(t_tilde);
  const bool at_start = std::abs(t_tilde - grid.t0) <= 1e-12 * std::max(1.0, std::abs(t_tilde));

  if (const auto* combos = std::get_if<PartialCombos>(&theta_hat)) {
    const double y = chain.channels[0](static_cast<Eigen::Index>(i), 0);
    const double yd = chain.channels[0](static_cast<Eigen::Index>(i), 1);
    const std::array<double, 2> sigma{combos->gamma * combos->beta_over_k, combos->beta_over_k};
    if (at_start) return sir_combos(sigma, y, yd);
    return sir_combos_at(sigma, y, yd, t_tilde, grid);
  }

  const auto& theta = std::get<ParamVector>(theta_hat);
  State x = invert_state_at(model, chain, i, theta);
  if (at_start) return x;
  return integrate_backward(model, theta, x, t_tilde, grid);
}

ReconstructionResult reconstruct_multitime(const Model& model, const DerivativeChain& chain,
                                           TimeWindow window,
                                           const ReconstructOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const auto times = select_times_multitime(model, chain, window);
  SigmaSolution sol = solve_multitime(model, chain, times);
  ReconstructionResult res;
  res.method = Method::MultiTime;
  res.sigma = sol.sigma;
  res.theta_hat = recover_theta(sol.sigma, model, options.tol_sir);
  res.blocks = std::move(sol.blocks);
  finish(res, model);

  const auto idx = window_indices(chain, window);
  const int inv = inversion_order(model);
  std::size_t at = idx.front();
  for (std::size_t i : idx) {
    const auto jets = chain.jets_at(i, inv);
    if (std::all_of(jets.begin(), jets.end(),
                    [](const Jet& j) { return std::abs(j.value()) > kOutputFloor; })) {
      at = i;
      break;
    }
  }
  fill_state(res, model, chain, at, options);
  res.elapsed_seconds = elapsed_since(start);
  return res;
}

ReconstructionResult reconstruct_wronskian(const Model& model, const DerivativeChain& chain,
                                           double t_tilde, const ReconstructOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  SigmaSolution sol = solve_wronskian(model, chain, t_tilde);
  ReconstructionResult res;
  res.method = Method::Wronskian;
  res.sigma = sol.sigma;
  res.theta_hat = recover_theta(sol.sigma, model, options.tol_sir);
  res.blocks = std::move(sol.blocks);
  finish(res, model);
  fill_state(res, model, chain, chain.index_of(t_tilde), options);
  res.elapsed_seconds = elapsed_since(start);
  return res;
}

std::vector<BatchOutcome> reconstruct_wronskian_batch(const Model& model,
                                                      const DerivativeChain& chain,
                                                      std::span<const double> times,
                                                      const ReconstructOptions& options,
                                                      unsigned threads) {
  std::vector<BatchOutcome> out(times.size());
  auto run = [&](std::size_t first, std::size_t last) {
    for (std::size_t i = first; i < last; ++i) {
      out[i].t_tilde = times[i];
      try {
        out[i].result = reconstruct_wronskian(model, chain, times[i], options);
      } catch (const Error& e) {
        out[i].error = e.kind();
        out[i].message = e.what();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, times.size())));
  if (threads <= 1) {
    run(0, times.size());
    return out;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (times.size() + threads - 1) / threads;
  for (unsigned w = 0; w < threads; ++w) {
    const std::size_t first = w * chunk;
    const std::size_t last = std::min(times.size(), first + chunk);
    if (first >= last) break;
    pool.emplace_back(run, first, last);
  }
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace epiident
