#include "gsa/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace gsa {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw PlacementError("placement: " + msg); }

struct PolarNoise {
    double mag = 0.0; // additive magnitude error
    double ang = 0.0; // additive angle error, rad
};

/// First-order polar-to-rectangular variance map, evaluated at the measured
/// phasor. With equal fractional magnitude and absolute angle sigmas this
/// collapses to equal per-component variances.
void pmu_component_variances(double mag, double ang, double sigma_mag, double sigma_ang,
                             double& var_re, double& var_im) {
    const double c = std::cos(ang), s = std::sin(ang);
    var_re = sigma_mag * c * sigma_mag * c + mag * sigma_ang * s * mag * sigma_ang * s;
    var_im = sigma_mag * s * sigma_mag * s + mag * sigma_ang * c * mag * sigma_ang * c;
    const double floor = 1e-24;
    var_re = std::max(var_re, floor);
    var_im = std::max(var_im, floor);
}

} // namespace

Complex equivalent_current(double p, double q, Complex v) {
    if (std::abs(v) < 1e-9) {
        throw std::domain_error("equivalent_current: zero voltage divisor");
    }
    return std::conj(Complex{p, q} / v);
}

Placement default_placement(const FeederModel& model, const std::vector<int>& pmu_buses) {
    if (pmu_buses.empty()) fail("at least one PMU required");
    Placement pl;
    for (std::size_t i = 0; i < pmu_buses.size(); ++i) {
        PmuDevice d;
        d.id = static_cast<int>(i) + 1;
        d.bus = pmu_buses[i];
        if (d.bus == model.slack_bus) {
            const auto si = static_cast<std::size_t>(model.index_of(model.slack_bus));
            d.branches = model.child_branches[si];
        } else {
            d.branches = {model.branch_into(d.bus)};
        }
        std::sort(d.branches.begin(), d.branches.end());
        pl.pmus.push_back(d);
    }
    for (const auto& b : model.buses) {
        bool has_any = false;
        for (Phase p : kPhases) has_any = has_any || b.has_injection(p);
        if (has_any) pl.smart_meter_buses.push_back(b.id);
    }
    validate_placement(model, pl);
    return pl;
}

void validate_placement(const FeederModel& model, const Placement& placement) {
    if (placement.pmus.empty()) fail("no PMUs");
    for (std::size_t i = 0; i < placement.pmus.size(); ++i) {
        const auto& d = placement.pmus[i];
        if (d.id != static_cast<int>(i) + 1) fail("PMU ids must be 1-based and contiguous");
        model.index_of(d.bus); // throws on unknown bus
        if (d.branches.empty()) {
            fail("PMU " + std::to_string(d.id) + " measures no branch current");
        }
        for (int bid : d.branches) {
            if (bid < 1 || bid > model.n_branches()) {
                fail("PMU " + std::to_string(d.id) + " references unknown branch " +
                     std::to_string(bid));
            }
            const auto& br = model.branch(bid);
            if (br.from_bus != d.bus && br.to_bus != d.bus) {
                fail("PMU " + std::to_string(d.id) + " branch " + std::to_string(bid) +
                     " is not incident to bus " + std::to_string(d.bus));
            }
        }
    }
    if (placement.pmus.front().bus != model.slack_bus) {
        fail("PMU 1 must be located at the slack bus");
    }
    for (int bus : placement.smart_meter_buses) model.index_of(bus);
}

MeasurementSet measurement_layout(const FeederModel& model, const Placement& placement) {
    MeasurementSet ms;

    for (const auto& d : placement.pmus) {
        PmuSpan span;
        span.v_begin = ms.size();
        const auto& bus = model.bus(d.bus);
        for (Phase p : kPhases) {
            if (!bus.phases.has(p)) continue;
            ms.entries.push_back({MeasKind::PmuVoltage, Component::Re, p, d.id, d.bus, 0});
            ms.entries.push_back({MeasKind::PmuVoltage, Component::Im, p, d.id, d.bus, 0});
        }
        span.v_end = ms.size();
        ms.pmu_spans.push_back(span);
    }
    for (std::size_t i = 0; i < placement.pmus.size(); ++i) {
        const auto& d = placement.pmus[i];
        ms.pmu_spans[i].i_begin = ms.size();
        std::vector<int> branch_ids = d.branches;
        std::sort(branch_ids.begin(), branch_ids.end());
        for (int bid : branch_ids) {
            const auto& br = model.branch(bid);
            for (Phase p : kPhases) {
                if (!br.phases.has(p)) continue;
                ms.entries.push_back({MeasKind::PmuCurrent, Component::Re, p, d.id, d.bus, bid});
                ms.entries.push_back({MeasKind::PmuCurrent, Component::Im, p, d.id, d.bus, bid});
            }
        }
        ms.pmu_spans[i].i_end = ms.size();
    }

    std::vector<int> meter_buses = placement.smart_meter_buses;
    std::sort(meter_buses.begin(), meter_buses.end());

    ms.meter_begin = ms.size();
    // One complex z_S row per (non-slack bus, present phase): a smart meter
    // where the bus is metered and injects power, a structural zero-injection
    // row where it injects nothing. A loaded but unmetered phase gets no row;
    // observability is then checked downstream.
    for (const auto& b : model.buses) {
        if (b.id == model.slack_bus) continue;
        const bool metered = std::binary_search(meter_buses.begin(), meter_buses.end(), b.id);
        for (Phase p : kPhases) {
            if (!b.phases.has(p)) continue;
            const bool injects = b.has_injection(p);
            if (injects && !metered) continue;
            MeterRecord rec;
            rec.bus = b.id;
            rec.phase = p;
            rec.zero_injection = !injects;
            ms.meters.push_back(rec);
            ms.entries.push_back({MeasKind::MeterCurrent, Component::Re, p, 0, b.id, 0});
            ms.entries.push_back({MeasKind::MeterCurrent, Component::Im, p, 0, b.id, 0});
        }
    }

    ms.values.assign(static_cast<std::size_t>(ms.size()), 0.0);
    ms.variances.assign(static_cast<std::size_t>(ms.size()), 1.0);
    return ms;
}

namespace {

MeasurementSet synthesize_impl(const FeederModel& model, const TrueState& truth,
                               const Placement& placement, const NoiseSpec& noise,
                               std::uint64_t seed, bool noiseless) {
    validate_placement(model, placement);
    MeasurementSet ms = measurement_layout(model, placement);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    auto draw = [&](double sigma) { return noiseless ? 0.0 : sigma * unit(rng); };

    const double sigma_mag_frac = noise.pmu_mag_max / 3.0;
    const double sigma_ang = noise.pmu_angle_max / 3.0;
    const double sigma_pow_frac = noise.meter_power_max / 3.0;

    // PMU phasors: one polar draw per phasor, consumed in entry order.
    int e = 0;
    while (e < ms.meter_begin) {
        const MeasEntry& ent = ms.entries[static_cast<std::size_t>(e)];
        const Complex true_ph = ent.kind == MeasKind::PmuVoltage
                                    ? truth.voltage(model, ent.bus, ent.phase)
                                    : truth.current(ent.branch, ent.phase);
        const double true_mag = std::abs(true_ph);
        const double true_ang = std::arg(true_ph);
        const double sigma_mag = sigma_mag_frac * true_mag;
        const double mag = true_mag + draw(sigma_mag);
        const double ang = true_ang + draw(sigma_ang);

        double var_re = 0.0, var_im = 0.0;
        pmu_component_variances(mag, ang, sigma_mag_frac * std::abs(mag), sigma_ang, var_re, var_im);

        ms.values[static_cast<std::size_t>(e)] = mag * std::cos(ang);
        ms.variances[static_cast<std::size_t>(e)] = var_re;
        ms.values[static_cast<std::size_t>(e) + 1] = mag * std::sin(ang);
        ms.variances[static_cast<std::size_t>(e) + 1] = var_im;
        e += 2;
    }

    // Smart meters: per-component power noise; zero-injection rows are exact.
    for (auto& rec : ms.meters) {
        if (rec.zero_injection) {
            rec.p = 0.0;
            rec.q = 0.0;
            rec.sigma = noise.zero_injection_sigma;
            continue;
        }
        const Bus& bus = model.bus(rec.bus);
        const auto ip = static_cast<std::size_t>(rec.phase);
        const Complex s_true = bus.load_pu[ip] - bus.dg_pu[ip];
        const double sig_p = sigma_pow_frac * std::abs(s_true.real());
        const double sig_q = sigma_pow_frac * std::abs(s_true.imag());
        rec.p = s_true.real() + draw(sig_p);
        rec.q = s_true.imag() + draw(sig_q);
        // Symmetrized per-pair sigma, re-evaluated at the measured powers;
        // keeps the pair isotropic so J is rotation invariant.
        const double sp = sigma_pow_frac * std::abs(rec.p);
        const double sq = sigma_pow_frac * std::abs(rec.q);
        rec.sigma = std::max(std::sqrt(0.5 * (sp * sp + sq * sq)), noise.meter_sigma_floor);
    }

    linearize_meters_at_slack(ms, model);
    return ms;
}

} // namespace

MeasurementSet synthesize(const FeederModel& model, const TrueState& truth,
                          const Placement& placement, const NoiseSpec& noise,
                          std::uint64_t seed) {
    return synthesize_impl(model, truth, placement, noise, seed, false);
}

MeasurementSet synthesize_exact(const FeederModel& model, const TrueState& truth,
                                const Placement& placement, const NoiseSpec& noise) {
    return synthesize_impl(model, truth, placement, noise, 0, true);
}

void relinearize_meters(MeasurementSet& mset, const FeederModel& model,
                        const std::vector<std::array<Complex, 3>>& bus_voltage) {
    for (std::size_t k = 0; k < mset.meters.size(); ++k) {
        const MeterRecord& rec = mset.meters[k];
        const auto bi = static_cast<std::size_t>(model.index_of(rec.bus));
        const Complex v = bus_voltage[bi][static_cast<std::size_t>(rec.phase)];
        const Complex ieq = equivalent_current(rec.p, rec.q, v);
        const auto e = static_cast<std::size_t>(mset.meter_begin) + 2 * k;
        mset.values[e] = ieq.real();
        mset.values[e + 1] = ieq.imag();
    }
}

void linearize_meters_at_slack(MeasurementSet& mset, const FeederModel& model) {
    for (std::size_t k = 0; k < mset.meters.size(); ++k) {
        const MeterRecord& rec = mset.meters[k];
        const auto ip = static_cast<std::size_t>(rec.phase);
        const Complex v_slack = model.slack_voltage[ip];
        const Complex ieq = equivalent_current(rec.p, rec.q, v_slack);
        const auto e = static_cast<std::size_t>(mset.meter_begin) + 2 * k;
        mset.values[e] = ieq.real();
        mset.values[e + 1] = ieq.imag();
        const double sigma_i = rec.sigma / std::abs(v_slack);
        mset.variances[e] = sigma_i * sigma_i;
        mset.variances[e + 1] = sigma_i * sigma_i;
    }
}

} // namespace gsa
