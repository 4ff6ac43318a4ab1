#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gsa/identify.hpp"
#include "gsa/scenario.hpp"

namespace gsa {

/// (bus, phase) keys of all present phases, bus-ascending; fixes the layout
/// of the flattened voltage vectors below.
std::vector<std::pair<int, Phase>> voltage_keys(const FeederModel& model);

struct TrialRecord {
    int trial = 0;
    std::vector<double> theta_true; // per PMU, rad
    std::vector<double> theta_hat;  // per PMU, rad; zero when uncorrected
    std::vector<std::uint8_t> attacked; // a_i per PMU
    std::vector<std::uint8_t> alpha;    // miss indicator, PMUs 2..N
    std::vector<std::uint8_t> beta;     // false-detection indicator
    std::vector<ProbeVerdict> verdicts; // PMUs 2..N

    bool corrected = false;
    std::vector<double> v_mag_corr, v_ang_corr; // per voltage key
    std::vector<double> v_mag_unc, v_ang_unc;   // estimates from spoofed data

    bool failed = false;
    std::string error;
};

struct RmseRow {
    int bus = 0;
    Phase phase = Phase::A;
    double delta_v = 0.0;    // relative magnitude RMSE
    double delta_theta = 0.0; // angle RMSE, rad
};

struct RmseTable {
    std::vector<RmseRow> rows;
    std::array<double, 3> max_delta_v{};     // per phase, over buses
    std::array<double, 3> max_delta_theta{};
    std::array<double, 3> avg_delta_v{};
    std::array<double, 3> avg_delta_theta{};
};

struct AggregateMetrics {
    int trials_requested = 0;
    int trials_used = 0;
    std::optional<double> pmd;
    std::optional<double> pfd;
    std::optional<double> epsilon; // rad
    RmseTable rmse_corrected;
    RmseTable rmse_uncorrected;
    long objective_evaluations = 0;
    double runtime_seconds = 0.0;
};

struct MonteCarloOutput {
    std::vector<TrialRecord> records;
    AggregateMetrics aggregate;
    std::vector<std::pair<int, Phase>> keys;
    std::vector<double> v_mag_true, v_ang_true;
};

/// Per trial: synthesize -> apply_gsa -> identify_all -> (pso_correct ->
/// correct -> estimate) -> score. Trial j uses seed + j; trials may run
/// concurrently, aggregation is order independent.
MonteCarloOutput run_montecarlo(const FeederModel& model, const ScenarioConfig& cfg);

std::pair<std::optional<double>, std::optional<double>> pmd_pfd(
    const std::vector<TrialRecord>& records);

/// Mean absolute wrap-aware angle error over attacked PMUs (undefined when
/// none is attacked).
std::optional<double> estimation_error(const std::vector<TrialRecord>& records);

RmseTable rmse(const std::vector<TrialRecord>& records,
               const std::vector<std::pair<int, Phase>>& keys,
               const std::vector<double>& v_mag_true, const std::vector<double>& v_ang_true,
               bool corrected);

} // namespace gsa
