#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "epiident/derivative_chain.hpp"
#include "epiident/model.hpp"
#include "epiident/ode_engine.hpp"
#include "epiident/reconstructor.hpp"

namespace epiident {

inline constexpr int kSchemaVersion = 1;

// Seventeen significant digits, enough to round-trip every double.
std::string format_double(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  // Column position, or -1.
  int column(const std::string& name) const;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

void write_trajectory_csv(std::ostream& out, const Model& model, const Trajectory& traj);
// Daily sampling keeps the integer-day grid points only.
void write_observations_csv(std::ostream& out, const Model& model, const Trajectory& traj,
                            bool daily);
void write_chain_csv(std::ostream& out, const DerivativeChain& chain);

// Column name of the k-th derivative of an output channel.
std::string derivative_column(const std::string& channel, int k, bool multi_output);

// Reads every derivative column present for the model's outputs.
DerivativeChain chain_from_csv(const CsvTable& table, const Model& model);

nlohmann::json theta_json(const Model& model, const ParamVector& theta);
nlohmann::json state_json(const Model& model, const State& x);
nlohmann::json reconstruction_json(const Model& model, const ReconstructionResult& result,
                                   bool timing);

}  // namespace epiident
