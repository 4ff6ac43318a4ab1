#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

#include "gsa/attack.hpp"
#include "gsa/estimator.hpp"
#include "gsa/measurement.hpp"

namespace gsa {

/// Table-driven verdict of one probe: compare J(+dtheta)/J and J(-dtheta)/J
/// against 1.
enum class ProbeCategory : std::uint8_t {
    NoAttack,         // both ratios rise
    ExactlyPi,        // both fall
    PositiveInterval, // (0, pi): plus rises, minus falls
    NegativeInterval, // (-pi, 0): plus falls, minus rises
};

const char* to_string(ProbeCategory c);

struct ProbeVerdict {
    int pmu = 0; // device id
    double j = 0.0;
    double j_plus = 0.0;
    double j_minus = 0.0;
    ProbeCategory category = ProbeCategory::NoAttack;
    bool attacked = false;
    /// Either ratio within 1% of the decision threshold; the verdict is
    /// reported anyway but should not be trusted near the 0 / pi seams.
    bool low_confidence = false;
};

struct IdentificationResult {
    std::vector<ProbeVerdict> verdicts; // PMUs 2..N in id order
    std::vector<int> p1;                // theta = pi
    std::vector<int> p2;                // theta in (0, pi)
    std::vector<int> p3;                // theta in (-pi, 0)
};

/// The sub-measurement-set N_i = M_i (PMU i) + S (substation PMU and all
/// meters), with the row indices of PMU i's pairs inside the subset.
struct TestDatasetRows {
    int pmu = 0; // device id, >= 2
    std::vector<int> rows;
    int vi_begin = 0, vi_end = 0;
    int ii_begin = 0, ii_end = 0;
};

class IdentifyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Maximum phase measurement error of a compliant PMU; the probing signal
/// must exceed twice this floor.
constexpr double kPmuAngleErrorBound = 0.01; // rad

/// Probing-based locator for spoofed PMUs. The row structure of every test
/// dataset is built once per placement; weights are taken from the
/// measurement set under test, so per-call work is one QR per PMU.
/// Immutable after construction; probes are independent and thread-safe.
class Identifier {
public:
    Identifier(const FeederModel& model, const Placement& placement);

    const TestDatasetRows& dataset_rows(int pmu_id) const;

    /// Bundle of N_i for the given measurement set's variances.
    JacobianBundle build_dataset_bundle(int pmu_id, const MeasurementSet& mset) const;

    ProbeVerdict probe(int pmu_id, const MeasurementSet& mset, double delta_theta) const;

    IdentificationResult identify_all(const MeasurementSet& mset, double delta_theta) const;

    /// J over a grid of superposed rotations of PMU i's entries (the
    /// closed-form objective on N_i). Grid angles in rad.
    std::vector<std::pair<double, double>> sweep_objective(int pmu_id, const MeasurementSet& mset,
                                                           const std::vector<double>& grid) const;

    const FeederModel& model() const { return model_; }
    const Placement& placement() const { return placement_; }

private:
    const FeederModel& model_;
    Placement placement_;
    std::vector<TestDatasetRows> datasets_; // PMUs 2..N

    linalg::Vec gather(const MeasurementSet& mset, const TestDatasetRows& ds) const;
};

/// Category implied by a true spoof angle (canonicalized).
ProbeCategory true_category(double theta);

} // namespace gsa
