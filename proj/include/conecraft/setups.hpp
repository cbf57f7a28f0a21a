#pragma once

#include <functional>
#include <vector>

#include "conecraft/config.hpp"
#include "conecraft/density.hpp"
#include "conecraft/leveling.hpp"
#include "conecraft/skorokhod.hpp"

namespace conecraft {

// Translation of a parsed configuration into module inputs.

McOptions mc_options(const ExperimentConfig& config);
Vec to_vec(const std::vector<double>& values);

MinorizationSetup minorization_setup(const ExperimentConfig& config);
KilledFloorSetup killed_floor_setup(const ExperimentConfig& config, int dim);
LevelingSetup exit_setup(const ExperimentConfig& config);

/// f for the leveling kind: indicator 1{<a, z> > c} or a constant.
std::function<double(const Vec&)> boundary_functional(const ExperimentConfig& config, int dim);
/// Declared bound of the leveling functional.
double boundary_functional_bound(const ExperimentConfig& config);
/// psi for the psi_gap kind: (1 + log+ t)^q or a constant.
std::function<double(double)> time_functional(const ExperimentConfig& config);
/// Declared bound of psi over [0, final horizon].
double time_functional_bound(const ExperimentConfig& config);

/// Input path of the sp_solve kind (inline or from path_csv).
PiecewisePath sp_input_path(const ExperimentConfig& config);

/// Kind-specific semantic checks; throws naming the violated rule.
void validate_kind(const ExperimentConfig& config, const PolyhedralCone& cone, const DiffusionModel& model);

}  // namespace conecraft
