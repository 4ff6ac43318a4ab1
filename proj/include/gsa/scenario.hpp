#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "gsa/attack.hpp"
#include "gsa/correct.hpp"
#include "gsa/measurement.hpp"

namespace gsa {

/// One experiment: a feeder, a placement, a noise model, an attack, and the
/// identification/correction knobs. Mirrors the scenario JSON document.
struct ScenarioConfig {
    std::string feeder_path;

    std::vector<int> pmu_buses;
    std::vector<std::vector<int>> pmu_branch_buses; // per PMU: to_bus ids, empty = default
    std::vector<int> meter_buses;                   // empty = all load/DG buses
    bool meters_all = true;

    NoiseSpec noise;
    std::vector<double> psi_pi; // spoof angles in units of pi, one per PMU
    double delta_theta = 0.2;   // rad
    PsoParams pso;

    int trials = 100;
    std::uint64_t seed = 1;
    bool run_correction = true;
    int jobs = 0; // 0 = hardware concurrency
    std::string output_dir = "out";
};

class ScenarioError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

ScenarioConfig load_scenario_file(const std::string& path);
ScenarioConfig parse_scenario(const std::string& json_text, const std::string& base_dir);

Placement placement_from_config(const FeederModel& model, const ScenarioConfig& cfg);
AttackProfile profile_from_config(const ScenarioConfig& cfg);

} // namespace gsa
