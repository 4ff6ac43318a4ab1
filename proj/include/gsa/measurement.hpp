#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "gsa/feeder.hpp"
#include "gsa/linalg.hpp"
#include "gsa/powerflow.hpp"

namespace gsa {

/// One PMU: a voltage phasor at `bus` plus current phasors on `branches`.
/// Device id 1 is the substation PMU and must sit at the slack bus.
struct PmuDevice {
    int id = 0;
    int bus = 0;
    std::vector<int> branches; // branch ids, ascending
};

struct Placement {
    std::vector<PmuDevice> pmus;
    std::vector<int> smart_meter_buses; // external ids, ascending

    int n_pmus() const { return static_cast<int>(pmus.size()); }
};

class PlacementError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Builds a placement from PMU bus ids with the default current coverage:
/// the substation PMU measures the branches leaving the slack, every other
/// PMU measures the single branch entering its bus. Meters default to every
/// load/DG bus.
Placement default_placement(const FeederModel& model, const std::vector<int>& pmu_buses);
void validate_placement(const FeederModel& model, const Placement& placement);

/// Maximum errors (3-sigma) of the measurement devices.
struct NoiseSpec {
    double pmu_mag_max = 0.01;    // fraction of true magnitude
    double pmu_angle_max = 0.01;  // rad
    double meter_power_max = 0.03; // fraction of true P and Q

    double zero_injection_sigma = 1e-6; // p.u., structural zero-injection rows
    double meter_sigma_floor = 1e-6;    // p.u., guards zero-power meters
};

enum class MeasKind : std::uint8_t { PmuVoltage, PmuCurrent, MeterCurrent };
enum class Component : std::uint8_t { Re, Im };

struct MeasEntry {
    MeasKind kind;
    Component comp;
    Phase phase;
    int pmu;    // 1-based device id; 0 for meter rows
    int bus;    // voltage / meter location
    int branch; // current location; 0 otherwise
};

/// Raw smart-meter record retained for re-linearization. Zero-injection
/// rows are structural pseudo-measurements with exact zero power.
struct MeterRecord {
    int bus = 0;
    Phase phase = Phase::A;
    double p = 0.0; // measured, p.u., consumed positive
    double q = 0.0;
    double sigma = 0.0; // common per-component sigma of the power pair
    bool zero_injection = false;
};

struct PmuSpan {
    int v_begin = 0, v_end = 0; // entry index range of the voltage pairs
    int i_begin = 0, i_end = 0; // entry index range of the current pairs
};

/// Ordered measurement vector z = [z_V; z_I; z_S]: PMU voltages by device id
/// then phase (re, im), PMU currents by device id then branch then phase,
/// meter equivalent currents by bus then phase. The entry order is a pure
/// function of the placement.
struct MeasurementSet {
    std::vector<MeasEntry> entries;
    linalg::Vec values;
    linalg::Vec variances;

    std::vector<MeterRecord> meters; // one per meter entry pair, same order
    std::vector<PmuSpan> pmu_spans;  // by pmu index (id - 1)
    int meter_begin = 0;             // index of the first z_S entry

    int size() const { return static_cast<int>(entries.size()); }
};

/// conj((p + jq) / v); consumed load gives positive p, DG negative.
Complex equivalent_current(double p, double q, Complex v);

/// Entry ordering, spans, and meter rows for a placement, with zero values
/// and unit variances. A pure function of the placement.
MeasurementSet measurement_layout(const FeederModel& model, const Placement& placement);

/// Synthesizes noisy measurements from a converged operating point. PMU
/// phasors are perturbed in polar form, meter powers per component; meter
/// entries are materialized at the slack voltage. Deterministic given seed.
MeasurementSet synthesize(const FeederModel& model, const TrueState& truth,
                          const Placement& placement, const NoiseSpec& noise,
                          std::uint64_t seed);

/// Noise-free projection of the truth with the variances the NoiseSpec
/// would assign. Used by the analytic checks.
MeasurementSet synthesize_exact(const FeederModel& model, const TrueState& truth,
                                const Placement& placement, const NoiseSpec& noise);

/// Recomputes the z_S values from the raw meter records at the given bus
/// voltages (the iterative estimator's update). Variances are unchanged.
void relinearize_meters(MeasurementSet& mset, const FeederModel& model,
                        const std::vector<std::array<Complex, 3>>& bus_voltage);

/// Fixes the z_S values at the slack voltage (closed-form path). Idempotent.
void linearize_meters_at_slack(MeasurementSet& mset, const FeederModel& model);

} // namespace gsa
