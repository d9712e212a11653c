#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "epiident/derivative_chain.hpp"
#include "epiident/model.hpp"
#include "epiident/ode_engine.hpp"

namespace epiident::testing {

inline constexpr double kCase1Step = 0.03125;

inline ParamVector case1_theta() { return {ModelId::Sirs, {0.3, 0.25, 0.1, 0.05}}; }
inline ParamVector case2_theta() { return {ModelId::Sir, {0.3, 0.25, 0.1}}; }
inline State case_x0() { return {0.9, 0.1}; }

struct Draw {
  ParamVector theta;
  State x0;
};

// Parameters in the model's box and an initial state inside Omega, away from equilibria.
Draw random_draw(const Model& model, std::mt19937_64& rng);

// Highest derivative order any regression block of the model consumes.
int regression_order(const Model& model);

double rel_err(double estimate, double truth);

std::string temp_path(const std::string& stem);

}  // namespace epiident::testing
