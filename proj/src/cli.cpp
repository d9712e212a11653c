#include "epiident/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "epiident/calibrator.hpp"
#include "epiident/derivative_chain.hpp"
#include "epiident/discriminator.hpp"
#include "epiident/errors.hpp"
#include "epiident/io.hpp"
#include "epiident/reconstructor.hpp"

namespace epiident {
namespace {

using nlohmann::json;

TimeWindow to_window(const std::vector<double>& v) {
  if (v.size() != 2) throw Error(ErrorKind::BadArgs, "--window needs two values a,b");
  return {v[0], v[1]};
}

// Writes to the named file, or to the fallback stream for "" and "-".
template <class Fn>
void emit(const std::string& path, std::ostream& fallback, Fn&& write) {
  if (path.empty() || path == "-") {
    write(fallback);
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorKind::IoError, "cannot write '" + path + "'");
  write(file);
  if (!file) throw Error(ErrorKind::IoError, "failed writing '" + path + "'");
}

int wronskian_order(const Model& model) {
  int order = 0;
  for (const auto& b : model.regression_blocks()) {
    order = std::max(order, b.d_prime + static_cast<int>(b.q) - 1);
  }
  for (int k : model.inversion_orders()) order = std::max(order, k);
  return order;
}

DerivativeChain keep_rows(const DerivativeChain& chain, const std::vector<std::size_t>& rows) {
  DerivativeChain out;
  out.order = chain.order;
  out.channel_names = chain.channel_names;
  for (const auto& ch : chain.channels) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), ch.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      m.row(static_cast<Eigen::Index>(r)) = ch.row(static_cast<Eigen::Index>(rows[r]));
    }
    out.channels.push_back(std::move(m));
  }
  for (std::size_t r : rows) {
    out.times.push_back(std::round(chain.times[r]));
    out.one_sided.push_back(false);
  }
  return out;
}

struct SimulateArgs {
  std::string model;
  std::vector<double> theta;
  std::vector<double> x0;
  double h = 0.03125;
  double tmax = 5.0;
  double t0 = 0.0;
  std::string sampling = "continuous";
  std::string trajectory;
  std::string observations;
  std::string chain;
  std::string chain_method = "analytic";
  int order = -1;
};

void run_simulate(const SimulateArgs& a, std::ostream& out) {
  const Model& model = model_by_name(a.model);
  const ParamVector theta{model.id(), a.theta};
  const State& x0 = a.x0;
  const Trajectory traj = integrate(model, theta, x0, {a.h, a.tmax, a.t0});
  const bool daily = a.sampling == "daily";

  if (!a.trajectory.empty()) {
    emit(a.trajectory, out, [&](std::ostream& s) { write_trajectory_csv(s, model, traj); });
  }
  if (!a.chain.empty()) {
    const int order = a.order >= 0 ? a.order : wronskian_order(model);
    DerivativeChain chain = a.chain_method == "lie" ? lie_chain(model, traj, order)
                                                    : analytic_chain(model, traj, order);
    if (daily) {
      std::vector<std::size_t> rows;
      for (std::size_t i = 0; i < chain.size(); ++i) {
        if (std::abs(chain.times[i] - std::round(chain.times[i])) <= 1e-9) rows.push_back(i);
      }
      chain = keep_rows(chain, rows);
    }
    emit(a.chain, out, [&](std::ostream& s) { write_chain_csv(s, chain); });
  }
  if (!a.observations.empty() || (a.trajectory.empty() && a.chain.empty())) {
    emit(a.observations, out,
         [&](std::ostream& s) { write_observations_csv(s, model, traj, daily); });
  }
}

DerivativeChain load_chain(const std::string& path, const Model& model, int needed) {
  const DerivativeChain chain = chain_from_csv(read_csv_file(path), model);
  if (chain.order == 0) {
    throw Error(ErrorKind::MethodNeedsDerivatives,
                "'" + path + "' holds output values only; exact-derivative methods need a chain "
                "file (simulate --chain), and sampled data should go through calibrate");
  }
  if (chain.order < needed) {
    throw Error(ErrorKind::OrderUnsupported, "'" + path + "' carries derivatives up to order " +
                                                 std::to_string(chain.order) + ", need " +
                                                 std::to_string(needed));
  }
  return chain;
}

TimeWindow default_window(const DerivativeChain& chain) {
  return {chain.times.front(), chain.times.back() + chain.step()};
}

struct ReconstructArgs {
  std::string input;
  std::string model = "sirs-ext";
  std::string method = "multitime";
  std::vector<double> window;
  std::optional<double> at;
  std::optional<double> t0;
  double tol_sir = kDefaultTolSir;
  std::string output;
  bool timing = false;
};

void run_reconstruct(const ReconstructArgs& a, std::ostream& out) {
  const Model& model = model_by_name(a.model);
  const TimeWindow window = a.window.empty() ? TimeWindow{0.0, 0.0} : to_window(a.window);
  const bool wronskian = a.method == "wronskian";
  int needed = 1;
  for (const auto& b : model.regression_blocks()) needed = std::max(needed, b.d_prime);
  if (wronskian) needed = wronskian_order(model);
  const DerivativeChain chain = load_chain(a.input, model, needed);

  ReconstructOptions opts;
  opts.tol_sir = a.tol_sir;
  opts.t0 = a.t0;
  const ReconstructionResult res =
      wronskian ? reconstruct_wronskian(model, chain, a.at.value_or(chain.times.front()), opts)
                : reconstruct_multitime(
                      model, chain, a.window.empty() ? default_window(chain) : window,
                      opts);
  const json j = reconstruction_json(model, res, a.timing);
  emit(a.output, out, [&](std::ostream& s) { s << j.dump(2) << '\n'; });
}

struct DiscriminateArgs {
  std::string input;
  std::string approach = "both";
  std::vector<double> window;
  double tol_sir = kDefaultTolSir;
  double dep_tol = 1e-8;
  double residual_tol = 1e-6;
  std::string output;
};

void run_discriminate(const DiscriminateArgs& a, std::ostream& out) {
  const Model& ext = model_by_id(ModelId::SirsExtended);
  const TimeWindow given = a.window.empty() ? TimeWindow{0.0, 0.0} : to_window(a.window);
  const DerivativeChain chain = load_chain(a.input, ext, 2);
  const TimeWindow window = a.window.empty() ? default_window(chain) : given;
  DiscriminationThresholds th{a.tol_sir, a.dep_tol, a.residual_tol};

  json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = "discriminate";
  j["window"] = {window.begin, window.end};
  j["thresholds"] = {{"tol_sir", th.tol_sir},
                     {"dep_tol", th.dep_tol},
                     {"residual_tol", th.residual_tol}};
  std::optional<Verdict> v1, v2;
  if (a.approach == "1" || a.approach == "both") {
    const auto r = discriminate_approach1(chain, window, th);
    v1 = r.verdict;
    j["approach1"] = {{"verdict", std::string(to_string(r.verdict))},
                      {"sigma", r.sigma},
                      {"times", r.times},
                      {"cond", r.cond},
                      {"regression_residual", r.regression_residual}};
  }
  if (a.approach == "2" || a.approach == "both") {
    const auto r = discriminate_approach2(chain, window, th);
    v2 = r.verdict;
    j["approach2"] = {{"verdict", std::string(to_string(r.verdict))},
                      {"dependence_residual", r.dependence_residual},
                      {"singular_values", r.singular_values},
                      {"samples", r.samples}};
  }
  if (v1 && v2 && *v1 != *v2) {
    throw Error(ErrorKind::ApproachesDisagree,
                "approach 1 says " + std::string(to_string(*v1)) + ", approach 2 says " +
                    std::string(to_string(*v2)));
  }
  j["verdict"] = std::string(to_string(v1 ? *v1 : *v2));
  emit(a.output, out, [&](std::ostream& s) { s << j.dump(2) << '\n'; });
}

struct CalibrateArgs {
  std::string observations;
  std::size_t starts = 20;
  std::uint64_t seed = 42;
  double amplification = 1e14;
  double h = 0.03125;
  std::size_t max_iter = 500000;
  unsigned threads = 0;
  std::vector<double> truth;
  double fit_threshold = 1e-8;
  std::string results;
  std::string summary;
  bool timing = false;
};

json stats_of(std::vector<double> v) {
  if (v.empty()) return nullptr;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  const double median = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  return {{"min", v.front()}, {"median", median}, {"max", v.back()}};
}

json combo_stats(const std::vector<CalibrationResult>& runs) {
  std::array<std::vector<double>, 3> c;
  for (const auto& r : runs) {
    for (std::size_t i = 0; i < 3; ++i) c[i].push_back(r.combos[i]);
  }
  return {{"count", runs.size()},
          {"gamma", stats_of(c[0])},
          {"beta_over_k", stats_of(c[1])},
          {"beta_S0", stats_of(c[2])}};
}

void run_calibrate(const CalibrateArgs& a, std::ostream& out) {
  const CsvTable table = read_csv_file(a.observations);
  const int tcol = table.column("t");
  const int ycol = table.column("y");
  if (tcol < 0 || ycol < 0) throw Error(ErrorKind::IoError, "observations need columns t,y");
  std::vector<double> t, y;
  for (const auto& row : table.rows) {
    t.push_back(row[static_cast<std::size_t>(tcol)]);
    y.push_back(row[static_cast<std::size_t>(ycol)]);
  }
  CalibrationProblem p = make_problem(t, y);
  p.amplification = a.amplification;
  p.h = a.h;
  p.starts = a.starts;
  p.seed = a.seed;
  p.max_iterations = a.max_iter;
  p.threads = a.threads;
  std::optional<std::vector<double>> truth;
  if (!a.truth.empty()) {
    if (a.truth.size() != 5) throw Error(ErrorKind::BadArgs, "--truth needs k,beta,gamma,mu,S0");
    truth = a.truth;
  }

  const auto results = calibrate(p);
  static constexpr std::array<const char*, 5> kNames{"k", "beta", "gamma", "mu", "S0"};

  emit(a.results, out, [&](std::ostream& s) {
    s << "test";
    for (auto n : kNames) s << ",start_" << n;
    for (auto n : kNames) s << ',' << n;
    if (truth) {
      for (auto n : kNames) s << ",abs_err_" << n;
    }
    s << ",objective,gamma_combo,beta_over_k,beta_S0,iterations,converged,termination";
    if (a.timing) s << ",elapsed_seconds";
    s << '\n';
    for (const auto& r : results) {
      s << r.start_index + 1;
      for (double v : r.start_point) s << ',' << format_double(v);
      for (double v : r.theta_hat) s << ',' << format_double(v);
      if (truth) {
        for (std::size_t i = 0; i < 5; ++i) {
          s << ',' << format_double(std::abs(r.theta_hat[i] - (*truth)[i]));
        }
      }
      s << ',' << format_double(r.objective);
      for (double v : r.combos) s << ',' << format_double(v);
      s << ',' << r.iterations << ',' << (r.converged ? 1 : 0) << ',' << to_string(r.reason);
      if (a.timing) s << ',' << format_double(r.elapsed_seconds);
      s << '\n';
    }
  });

  std::vector<CalibrationResult> converged, fitted;
  for (const auto& r : results) {
    if (!r.converged) continue;
    converged.push_back(r);
    if (r.objective < a.fit_threshold) fitted.push_back(r);
  }
  const auto& best = results.front();
  json theta = json::object();
  for (std::size_t i = 0; i < 5; ++i) theta[kNames[i]] = best.theta_hat[i];
  json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = "calibrate";
  j["model"] = "sirs-ext";
  j["observations"] = t.size();
  j["starts"] = a.starts;
  j["seed"] = a.seed;
  j["amplification"] = a.amplification;
  j["h"] = a.h;
  j["fit_threshold"] = a.fit_threshold;
  j["completed_runs"] = results.size();
  j["best"] = {{"test", best.start_index + 1},
               {"theta_hat", theta},
               {"objective", best.objective},
               {"combos", {{"gamma", best.combos[0]},
                           {"beta_over_k", best.combos[1]},
                           {"beta_S0", best.combos[2]}}},
               {"converged", best.converged},
               {"termination", std::string(to_string(best.reason))}};
  j["combo_stats"] = combo_stats(converged);
  j["fitted_combo_stats"] = combo_stats(fitted);
  if (a.timing) {
    double total = 0.0;
    for (const auto& r : results) total += r.elapsed_seconds;
    j["elapsed_seconds"] = total;
  }
  const bool same_stream = (a.summary.empty() || a.summary == "-") &&
                           (a.results.empty() || a.results == "-");
  if (same_stream) out << '\n';
  emit(a.summary, out, [&](std::ostream& s) { s << j.dump(2) << '\n'; });
}

struct ReportArgs {
  double beta = 2.5;
  double gamma = 1.0;
  double mu = 0.001;
  std::vector<double> x0{0.9, 0.1};
  double h = 0.03125;
  double tmax = 25.0;
  std::string output;
};

void run_report(const ReportArgs& a, std::ostream& out) {
  const ClosenessReport rep = closeness_bound_check(a.beta, a.gamma, a.mu, a.x0, {a.h, a.tmax, 0.0});
  emit(a.output, out, [&](std::ostream& s) {
    s << "t,S_sir,I_sir,S_sirs,I_sirs,gap,bound\n";
    for (std::size_t i = 0; i < rep.times.size(); ++i) {
      s << format_double(rep.times[i]) << ',' << format_double(rep.sir[i][0]) << ','
        << format_double(rep.sir[i][1]) << ',' << format_double(rep.sirs[i][0]) << ','
        << format_double(rep.sirs[i][1]) << ',' << format_double(rep.gap[i]) << ','
        << format_double(rep.bound[i]) << '\n';
    }
  });
}

void error_json(std::ostream& err, std::string_view kind, const std::string& message) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["error"] = std::string(kind);
  j["message"] = message;
  err << j.dump() << '\n';
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Parameter and initial-condition reconstruction for epidemic ODE models",
               "epiident"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.set_config("--config", "", "TOML or INI file holding option values");
  app.require_subcommand(1);

  const std::vector<std::string> model_names{"sirs",      "sir",  "sirs-ext",     "sir-demog",
                                             "sirv", "sir-incidence", "siv-demog"};

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Integrate a model and write trajectory/observations");
  s->add_option("--model", sim.model, "Model id")->required()->check(CLI::IsMember(model_names));
  s->add_option("--theta", sim.theta, "Comma-separated parameters")->required()->delimiter(',');
  s->add_option("--x0", sim.x0, "Comma-separated initial state")->required()->delimiter(',');
  s->add_option("--h", sim.h, "Step size (days)");
  s->add_option("--tmax", sim.tmax, "Final time (days)");
  s->add_option("--t0", sim.t0, "Initial time (days)");
  s->add_option("--sampling", sim.sampling, "Observation sampling")
      ->check(CLI::IsMember({"continuous", "daily"}));
  s->add_option("--trajectory", sim.trajectory, "Trajectory CSV path");
  s->add_option("--observations", sim.observations, "Observation CSV path ('-' for stdout)");
  s->add_option("--chain", sim.chain, "Derivative chain CSV path");
  s->add_option("--chain-method", sim.chain_method, "Chain construction")
      ->check(CLI::IsMember({"analytic", "lie"}));
  s->add_option("--order", sim.order, "Chain order (default: what the Wronskian method needs)")
      ->check(CLI::Range(0, kMaxChainOrder));

  ReconstructArgs rec;
  auto* r = app.add_subcommand("reconstruct", "Recover parameters and initial state from a chain");
  r->add_option("--input", rec.input, "Chain CSV (t,y,y1,...)")->required();
  r->add_option("--model", rec.model, "Regression model")->check(CLI::IsMember(model_names));
  r->add_option("--method", rec.method, "Reconstruction method")
      ->check(CLI::IsMember({"multitime", "wronskian"}));
  r->add_option("--window", rec.window, "Multi-time window a,b (half-open)")->delimiter(',');
  r->add_option("--at", rec.at, "Wronskian evaluation time");
  r->add_option("--t0", rec.t0, "Time of the recovered initial state");
  r->add_option("--tol-sir", rec.tol_sir, "SIR regime threshold on |sigma_1|, |sigma_3|");
  r->add_option("--output", rec.output, "Result JSON path");
  r->add_flag("--timing", rec.timing, "Include elapsed seconds");

  DiscriminateArgs dis;
  auto* d = app.add_subcommand("discriminate", "Decide between SIR and SIRS dynamics");
  d->add_option("--input", dis.input, "Chain CSV (t,y,y1,y2,...)")->required();
  d->add_option("--approach", dis.approach, "Test to run")->check(CLI::IsMember({"1", "2", "both"}));
  d->add_option("--window", dis.window, "Window a,b (half-open)")->delimiter(',');
  d->add_option("--tol-sir", dis.tol_sir, "Approach 1 threshold");
  d->add_option("--dep-tol", dis.dep_tol, "Approach 2 threshold");
  d->add_option("--residual-tol", dis.residual_tol, "Approach 1 regression misfit threshold");
  d->add_option("--output", dis.output, "Verdict JSON path");

  CalibrateArgs cal;
  auto* c = app.add_subcommand("calibrate", "Multi-start least squares on sampled observations");
  c->add_option("--observations", cal.observations, "Observation CSV (t,y)")->required();
  c->add_option("--starts", cal.starts, "Number of random starts")->check(CLI::PositiveNumber);
  c->add_option("--seed", cal.seed, "Master seed");
  c->add_option("--amplification", cal.amplification, "Objective amplification factor")
      ->check(CLI::PositiveNumber);
  c->add_option("--h", cal.h, "Inner RK4 step")->check(CLI::PositiveNumber);
  c->add_option("--max-iter", cal.max_iter, "Iteration cap per start")->check(CLI::PositiveNumber);
  c->add_option("--threads", cal.threads, "Worker threads (0: hardware)");
  c->add_option("--truth", cal.truth, "k,beta,gamma,mu,S0 for absolute errors")->delimiter(',');
  c->add_option("--fit-threshold", cal.fit_threshold, "Objective below which a run counts as fitted");
  c->add_option("--results", cal.results, "Results CSV path");
  c->add_option("--summary", cal.summary, "Summary JSON path");
  c->add_flag("--timing", cal.timing, "Include elapsed seconds");

  ReportArgs rep;
  auto* p = app.add_subcommand("report", "SIR/SIRS comparison data with the Lipschitz bound");
  p->add_option("--beta", rep.beta, "Contact rate");
  p->add_option("--gamma", rep.gamma, "Recovery rate");
  p->add_option("--mu", rep.mu, "Immunity loss rate")->check(CLI::NonNegativeNumber);
  p->add_option("--x0", rep.x0, "Shared initial state S,I")->delimiter(',');
  p->add_option("--h", rep.h, "Step size");
  p->add_option("--tmax", rep.tmax, "Final time");
  p->add_option("--output", rep.output, "CSV path");

  std::vector<std::string> argv_store{"epiident"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    error_json(err, "UsageError", e.what());
    return 2;
  }

  try {
    if (*s) run_simulate(sim, out);
    if (*r) run_reconstruct(rec, out);
    if (*d) run_discriminate(dis, out);
    if (*c) run_calibrate(cal, out);
    if (*p) run_report(rep, out);
  } catch (const Error& e) {
    error_json(err, to_string(e.kind()), e.what());
    return e.kind() == ErrorKind::BadArgs ? 2 : 1;
  } catch (const std::exception& e) {
    error_json(err, "InternalError", e.what());
    return 1;
  }
  return 0;
}

}  // namespace epiident
