#include "epiident/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "epiident/errors.hpp"

namespace epiident {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

void write_row(std::ostream& out, double t, const std::vector<double>& values) {
  out << format_double(t);
  for (double v : values) out << ',' << format_double(v);
  out << '\n';
}

bool is_integer_day(double t) { return std::abs(t - std::round(t)) <= 1e-9; }

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (table.header.empty()) {
      table.header = split(line);
      continue;
    }
    const auto fields = split(line);
    if (fields.size() != table.header.size()) {
      throw Error(ErrorKind::IoError, "line " + std::to_string(line_no) + " has " +
                                          std::to_string(fields.size()) + " fields, expected " +
                                          std::to_string(table.header.size()));
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(f, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != f.size() || f.empty()) {
        throw Error(ErrorKind::IoError,
                    "line " + std::to_string(line_no) + ": '" + f + "' is not a number");
      }
      row.push_back(v);
    }
    table.rows.push_back(std::move(row));
  }
  if (table.header.empty()) throw Error(ErrorKind::IoError, "CSV input is empty");
  return table;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path + "'");
  return read_csv(in);
}

void write_trajectory_csv(std::ostream& out, const Model& model, const Trajectory& traj) {
  out << 't';
  for (auto name : model.state_names()) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < traj.times.size(); ++i) write_row(out, traj.times[i], traj.states[i]);
}

void write_observations_csv(std::ostream& out, const Model& model, const Trajectory& traj,
                            bool daily) {
  out << 't';
  for (auto name : model.output_names()) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    if (daily && !is_integer_day(traj.times[i])) continue;
    const double t = daily ? std::round(traj.times[i]) : traj.times[i];
    write_row(out, t, model.output(traj.states[i], traj.theta));
  }
}

std::string derivative_column(const std::string& channel, int k, bool multi_output) {
  if (k == 0) return channel;
  return multi_output ? channel + "_" + std::to_string(k) : channel + std::to_string(k);
}

void write_chain_csv(std::ostream& out, const DerivativeChain& chain) {
  const bool multi = chain.channel_count() > 1;
  out << 't';
  for (const auto& name : chain.channel_names) {
    for (int k = 0; k <= chain.order; ++k) out << ',' << derivative_column(name, k, multi);
  }
  out << '\n';
  std::vector<double> row;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    row.clear();
    for (const auto& ch : chain.channels) {
      for (int k = 0; k <= chain.order; ++k) row.push_back(ch(static_cast<Eigen::Index>(i), k));
    }
    write_row(out, chain.times[i], row);
  }
}

DerivativeChain chain_from_csv(const CsvTable& table, const Model& model) {
  const int tcol = table.column("t");
  if (tcol < 0) throw Error(ErrorKind::IoError, "CSV input lacks a 't' column");
  const bool multi = model.output_dim() > 1;

  std::vector<std::string> names;
  for (auto n : model.output_names()) names.emplace_back(n);
  std::vector<std::vector<int>> cols(names.size());
  int order = -1;
  for (int k = 0; k <= kMaxChainOrder; ++k) {
    bool all = true;
    for (std::size_t c = 0; c < names.size(); ++c) {
      if (table.column(derivative_column(names[c], k, multi)) < 0) all = false;
    }
    if (!all) break;
    for (std::size_t c = 0; c < names.size(); ++c) {
      cols[c].push_back(table.column(derivative_column(names[c], k, multi)));
    }
    order = k;
  }
  if (order < 0) {
    std::string expected;
    for (const auto& n : names) expected += (expected.empty() ? "" : ",") + n;
    throw Error(ErrorKind::IoError, "CSV input lacks the output columns " + expected);
  }
  if (table.rows.size() < 2) throw Error(ErrorKind::TooFewSamples, "need at least two rows");

  DerivativeChain chain;
  chain.order = order;
  chain.channel_names = names;
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  for (std::size_t c = 0; c < names.size(); ++c) chain.channels.emplace_back(n, order + 1);
  chain.one_sided.assign(table.rows.size(), false);
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    chain.times.push_back(table.rows[i][static_cast<std::size_t>(tcol)]);
    for (std::size_t c = 0; c < names.size(); ++c) {
      for (int k = 0; k <= order; ++k) {
        chain.channels[c](static_cast<Eigen::Index>(i), k) =
            table.rows[i][static_cast<std::size_t>(cols[c][static_cast<std::size_t>(k)])];
      }
    }
  }
  const double h = chain.times[1] - chain.times[0];
  for (std::size_t i = 1; i < chain.times.size(); ++i) {
    const double d = chain.times[i] - chain.times[i - 1];
    if (!(h > 0.0) || std::abs(d - h) > 1e-9 * std::max(1.0, std::abs(h))) {
      throw Error(ErrorKind::BadArgs, "chain times must form a uniform increasing grid");
    }
  }
  return chain;
}

nlohmann::json theta_json(const Model& model, const ParamVector& theta) {
  nlohmann::json j = nlohmann::json::object();
  const auto bounds = model.param_bounds();
  for (std::size_t i = 0; i < theta.size() && i < bounds.size(); ++i) {
    j[std::string(bounds[i].name)] = theta[i];
  }
  return j;
}

nlohmann::json state_json(const Model& model, const State& x) {
  nlohmann::json j = nlohmann::json::object();
  const auto names = model.state_names();
  for (std::size_t i = 0; i < x.size() && i < names.size(); ++i) j[std::string(names[i])] = x[i];
  return j;
}

nlohmann::json reconstruction_json(const Model& model, const ReconstructionResult& res,
                                   bool timing) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = "reconstruct";
  j["model"] = std::string(model.name());
  j["method"] = std::string(to_string(res.method));
  j["sigma"] = res.sigma;
  if (const auto* theta = std::get_if<ParamVector>(&res.theta_hat)) {
    j["regime"] = model.id() == ModelId::SirsExtended ? "SIRS" : "full";
    j["theta_hat"] = theta_json(model, *theta);
    j["x0_hat"] = res.x0_hat ? state_json(model, *res.x0_hat) : nlohmann::json(nullptr);
  } else {
    const auto& c = std::get<PartialCombos>(res.theta_hat);
    j["regime"] = "SIR";
    nlohmann::json combos;
    combos["gamma"] = c.gamma;
    combos["beta_over_k"] = c.beta_over_k;
    combos["beta_S0"] = c.beta_S0 ? nlohmann::json(*c.beta_S0) : nlohmann::json(nullptr);
    combos["k_I0"] = c.k_I0 ? nlohmann::json(*c.k_I0) : nlohmann::json(nullptr);
    combos["at_time"] = c.at_time;
    combos["backward_integrated"] = c.backward_integrated;
    j["combos"] = combos;
  }
  j["times_used"] = res.times_used;
  j["det"] = res.det_value;
  j["cond"] = res.cond_number;
  j["t_inversion"] = res.t_inversion;
  j["trusted"] = res.trusted;
  j["theta_in_box"] = res.theta_in_box;
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : res.blocks) {
    blocks.push_back({{"block", b.block + 1},
                      {"times", b.times},
                      {"det", b.det},
                      {"cond", b.cond},
                      {"relative_residual", b.relative_residual},
                      {"trusted", b.trusted}});
  }
  j["blocks"] = blocks;
  if (timing) j["elapsed_seconds"] = res.elapsed_seconds;
  return j;
}

}  // namespace epiident
