#include "epiident/calibrator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>
#include <optional>
#include <thread>

#include <Eigen/Dense>

#include "epiident/errors.hpp"

namespace epiident {
namespace {

constexpr double kDampingCeiling = 1e32;
constexpr double kFeasibilitySlack = 1e-12;

// Amplified residuals sqrt(A) (k I(t_i) - y_i) along RK4 at the inner step.
class ResidualMap {
 public:
  explicit ResidualMap(const CalibrationProblem& p)
      : problem_(p), model_(model_by_id(ModelId::SirsExtended)), stepper_(2) {
    if (p.times.empty() || p.times.size() != p.values.size()) {
      throw Error(ErrorKind::AllStartsFailed, "calibration needs a non-empty observation set");
    }
    if (!(p.h > 0.0)) throw Error(ErrorKind::BadArgs, "inner step must be positive");
    const double t0 = p.times.front();
    for (std::size_t i = 0; i < p.times.size(); ++i) {
      const double n = (p.times[i] - t0) / p.h;
      if (std::abs(n - std::round(n)) > 1e-9 || (i > 0 && !(p.times[i] > p.times[i - 1]))) {
        throw Error(ErrorKind::BadArgs, "observation times must increase along the inner grid");
      }
      sample_steps_.push_back(static_cast<std::size_t>(std::round(n)));
    }
    root_amplification_ = std::sqrt(p.amplification);
  }

  std::size_t size() const { return sample_steps_.size(); }

  bool feasible(const Theta5& th) const {
    return problem_.values.front() / th[0] <= 1.0 - th[4] + kFeasibilitySlack;
  }

  // False when the integration produced non-finite values.
  bool evaluate(const Theta5& th, std::span<double> r) {
    const std::array<double, 4> params{th[0], th[1], th[2], th[3]};
    std::array<double, 2> x{th[4], problem_.values.front() / th[0]};
    auto field = [&](std::span<const double> s, std::span<double> ds) {
      model_.vector_field(s, params, ds);
    };
    std::size_t step = 0;
    for (std::size_t i = 0; i < sample_steps_.size(); ++i) {
      while (step < sample_steps_[i]) {
        stepper_.step(field, x, problem_.h);
        ++step;
      }
      r[i] = root_amplification_ * (th[0] * x[1] - problem_.values[i]);
      if (!std::isfinite(r[i])) return false;
    }
    return true;
  }

 private:
  const CalibrationProblem& problem_;
  const Model& model_;
  Rk4Stepper stepper_;
  std::vector<std::size_t> sample_steps_;
  double root_amplification_ = 1.0;
};

bool inside(const CalibrationBounds& b, const Theta5& th) {
  for (std::size_t i = 0; i < 5; ++i) {
    if (!(th[i] >= b.lo[i] && th[i] <= b.hi[i])) return false;
  }
  return true;
}

std::array<double, 3> combos_of(const Theta5& th) {
  return {th[2], th[1] / th[0], th[1] * th[4]};
}

}  // namespace

CalibrationBounds default_bounds(std::span<const double> values) {
  double ymin = 1.0;
  for (double v : values) ymin = std::min(ymin, v);
  return {{ymin, 1e-2, 1e-2, 0.0, 0.0}, {1.0, 3.0, 1.0, 1.0, 1.0 - 1e-10}};
}

CalibrationProblem make_problem(std::vector<double> times, std::vector<double> values) {
  CalibrationProblem p;
  p.bounds = default_bounds(values);
  p.times = std::move(times);
  p.values = std::move(values);
  return p;
}

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double SplitMix64::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

SplitMix64 start_generator(std::uint64_t seed, std::size_t start_index) {
  SplitMix64 mixer(seed ^ (0xD1B54A32D192ED03ULL * (static_cast<std::uint64_t>(start_index) + 1)));
  return SplitMix64(mixer.next());
}

Theta5 start_from_rho(const CalibrationBounds& bounds, const Theta5& rho) {
  Theta5 th;
  for (std::size_t i = 0; i < 5; ++i) th[i] = bounds.lo[i] + rho[i] * (bounds.hi[i] - bounds.lo[i]);
  return th;
}

Theta5 random_start(const CalibrationBounds& bounds, SplitMix64& rng) {
  Theta5 rho;
  for (double& r : rho) r = rng.uniform();
  return start_from_rho(bounds, rho);
}

double objective(const CalibrationProblem& problem, const Theta5& theta) {
  if (!inside(problem.bounds, theta)) {
    throw Error(ErrorKind::ThetaOutOfBox, "calibration parameters outside their bounds");
  }
  ResidualMap map(problem);
  if (!map.feasible(theta)) {
    throw Error(ErrorKind::InfeasibleInitialInfected, "y(0)/k exceeds 1 - S0");
  }
  std::vector<double> r(map.size());
  if (!map.evaluate(theta, r)) {
    throw Error(ErrorKind::IntegrationFailure, "integration produced non-finite values");
  }
  double f = 0.0;
  for (double v : r) f += v * v;
  return f;
}

std::string_view to_string(Termination reason) {
  switch (reason) {
    case Termination::StepTolerance: return "step_tolerance";
    case Termination::FunctionTolerance: return "function_tolerance";
    case Termination::ZeroResidual: return "zero_residual";
    case Termination::DampingLimit: return "damping_limit";
    case Termination::IterationLimit: return "iteration_limit";
  }
  return "unknown";
}

CalibrationResult minimize_from(const CalibrationProblem& problem, const Theta5& start,
                                std::size_t start_index) {
  const auto clock_start = std::chrono::steady_clock::now();
  ResidualMap map(problem);
  const auto& lo = problem.bounds.lo;
  const auto& hi = problem.bounds.hi;
  const auto m = static_cast<Eigen::Index>(map.size());

  CalibrationResult res;
  res.start_index = start_index;
  res.start_point = start;

  Eigen::Matrix<double, 5, 1> x;
  for (int i = 0; i < 5; ++i) x(i) = std::clamp(start[i], lo[i], hi[i]);
  auto as_theta = [](const Eigen::Matrix<double, 5, 1>& v) {
    return Theta5{v(0), v(1), v(2), v(3), v(4)};
  };

  Eigen::VectorXd r(m), r_trial(m), r_probe(m);
  if (!map.evaluate(as_theta(x), {r.data(), map.size()})) {
    throw Error(ErrorKind::IntegrationFailure, "start point integrates to non-finite values");
  }
  double f = r.squaredNorm();
  if (problem.record_history) res.history.push_back(f);

  Eigen::Matrix<double, Eigen::Dynamic, 5> jac(m, 5);
  double lambda = 1e-3;
  double growth = 2.0;
  bool done = false;

  while (!done && res.iterations < problem.max_iterations) {
    ++res.iterations;
    if (f == 0.0) {
      res.reason = Termination::ZeroResidual;
      break;
    }
    for (int j = 0; j < 5; ++j) {
      double h = 1e-8 * std::max(1.0, std::abs(x(j)));
      if (x(j) + h > hi[j]) h = -h;
      Eigen::Matrix<double, 5, 1> probe = x;
      probe(j) += h;
      if (!map.evaluate(as_theta(probe), {r_probe.data(), map.size()})) {
        throw Error(ErrorKind::IntegrationFailure, "Jacobian probe integrates to non-finite values");
      }
      jac.col(j) = (r_probe - r) / h;
    }
    const Eigen::Matrix<double, 5, 1> g = jac.transpose() * r;
    const Eigen::Matrix<double, 5, 5> a = jac.transpose() * jac;

    std::array<bool, 5> free{};
    std::vector<int> idx;
    for (int j = 0; j < 5; ++j) {
      const bool pinned = (x(j) <= lo[j] && g(j) > 0.0) || (x(j) >= hi[j] && g(j) < 0.0);
      free[static_cast<std::size_t>(j)] = !pinned;
      if (!pinned) idx.push_back(j);
    }
    if (idx.empty()) {
      res.reason = Termination::StepTolerance;
      break;
    }
    const auto nf = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd af(nf, nf);
    Eigen::VectorXd gf(nf);
    double diag_max = 0.0;
    for (Eigen::Index p = 0; p < nf; ++p) {
      gf(p) = g(idx[p]);
      for (Eigen::Index q = 0; q < nf; ++q) af(p, q) = a(idx[p], idx[q]);
      diag_max = std::max(diag_max, af(p, p));
    }

    while (true) {
      Eigen::MatrixXd damped = af;
      for (Eigen::Index p = 0; p < nf; ++p) {
        damped(p, p) += lambda * std::max(af(p, p), 1e-12 * std::max(diag_max, 1e-300));
      }
      const Eigen::VectorXd df = damped.ldlt().solve(-gf);
      Eigen::Matrix<double, 5, 1> trial = x;
      for (Eigen::Index p = 0; p < nf; ++p) trial(idx[p]) += df(p);
      for (int j = 0; j < 5; ++j) trial(j) = std::clamp(trial(j), lo[j], hi[j]);
      const Eigen::Matrix<double, 5, 1> step = trial - x;

      if (step.norm() <= problem.step_tolerance * (1.0 + x.norm())) {
        res.reason = Termination::StepTolerance;
        done = true;
        break;
      }
      const bool finite = map.evaluate(as_theta(trial), {r_trial.data(), map.size()});
      const double f_trial = finite ? r_trial.squaredNorm() : f;
      if (finite && f_trial < f) {
        const double predicted = -(2.0 * step.dot(g) + step.dot(a * step));
        const double rho = predicted > 0.0 ? (f - f_trial) / predicted : 0.0;
        lambda *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
        growth = 2.0;
        const double decrease = f - f_trial;
        x = trial;
        r = r_trial;
        f = f_trial;
        if (problem.record_history) res.history.push_back(f);
        if (decrease <= problem.function_tolerance * (1.0 + f)) {
          res.reason = Termination::FunctionTolerance;
          done = true;
        }
        break;
      }
      lambda *= growth;
      growth *= 2.0;
      if (lambda > kDampingCeiling) {
        res.reason = Termination::DampingLimit;
        done = true;
        break;
      }
    }
  }
  if (!done && res.reason != Termination::ZeroResidual && res.reason != Termination::StepTolerance) {
    res.reason = Termination::IterationLimit;
  }

  res.theta_hat = as_theta(x);
  res.objective = f;
  res.combos = combos_of(res.theta_hat);
  res.converged = res.reason != Termination::IterationLimit;
  res.feasible = map.feasible(res.theta_hat);
  res.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
  return res;
}

std::vector<CalibrationResult> calibrate(const CalibrationProblem& problem) {
  if (problem.starts == 0) throw Error(ErrorKind::BadArgs, "calibration needs at least one start");
  if (problem.times.empty()) {
    throw Error(ErrorKind::AllStartsFailed, "no observations to calibrate against");
  }
  std::vector<std::optional<CalibrationResult>> slots(problem.starts);
  std::vector<std::string> failures(problem.starts);
  auto run = [&](std::size_t first, std::size_t stride) {
    for (std::size_t j = first; j < problem.starts; j += stride) {
      SplitMix64 rng = start_generator(problem.seed, j);
      const Theta5 start = random_start(problem.bounds, rng);
      try {
        slots[j] = minimize_from(problem, start, j);
      } catch (const Error& e) {
        failures[j] = e.what();
      }
    }
  };
  unsigned threads = problem.threads == 0 ? std::thread::hardware_concurrency() : problem.threads;
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(problem.starts)));
  if (threads == 1) {
    run(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(run, w, threads);
    for (auto& t : pool) t.join();
  }

  std::vector<CalibrationResult> out;
  for (auto& s : slots) {
    if (s) out.push_back(std::move(*s));
  }
  if (out.empty()) {
    throw Error(ErrorKind::AllStartsFailed, "every start failed: " + failures.front());
  }
  std::sort(out.begin(), out.end(), [](const CalibrationResult& a, const CalibrationResult& b) {
    if (a.objective != b.objective) return a.objective < b.objective;
    return a.start_index < b.start_index;
  });
  return out;
}

}  // namespace epiident
