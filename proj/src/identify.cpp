#include "gsa/identify.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gsa {

const char* to_string(ProbeCategory c) {
    switch (c) {
        case ProbeCategory::NoAttack: return "no_attack";
        case ProbeCategory::ExactlyPi: return "pi";
        case ProbeCategory::PositiveInterval: return "positive";
        case ProbeCategory::NegativeInterval: return "negative";
    }
    return "?";
}

ProbeCategory true_category(double theta) {
    const double t = canonical_angle(theta);
    if (t == 0.0) return ProbeCategory::NoAttack;
    if (std::abs(t - M_PI) < 1e-12) return ProbeCategory::ExactlyPi;
    return t > 0.0 ? ProbeCategory::PositiveInterval : ProbeCategory::NegativeInterval;
}

Identifier::Identifier(const FeederModel& model, const Placement& placement)
    : model_(model), placement_(placement) {
    validate_placement(model, placement);
    // Row structure of N_i per PMU: substation PMU block, PMU i block, all
    // meter rows, kept in canonical z order (V, I, S).
    const MeasurementSet layout = measurement_layout(model, placement);
    for (int i = 2; i <= placement.n_pmus(); ++i) {
        TestDatasetRows ds;
        ds.pmu = i;
        const auto& s1 = layout.pmu_spans[0];
        const auto& si = layout.pmu_spans[static_cast<std::size_t>(i - 1)];
        for (int e = s1.v_begin; e < s1.v_end; ++e) ds.rows.push_back(e);
        ds.vi_begin = static_cast<int>(ds.rows.size());
        for (int e = si.v_begin; e < si.v_end; ++e) ds.rows.push_back(e);
        ds.vi_end = static_cast<int>(ds.rows.size());
        for (int e = s1.i_begin; e < s1.i_end; ++e) ds.rows.push_back(e);
        ds.ii_begin = static_cast<int>(ds.rows.size());
        for (int e = si.i_begin; e < si.i_end; ++e) ds.rows.push_back(e);
        ds.ii_end = static_cast<int>(ds.rows.size());
        for (int e = layout.meter_begin; e < layout.size(); ++e) ds.rows.push_back(e);
        datasets_.push_back(std::move(ds));
    }
}

const TestDatasetRows& Identifier::dataset_rows(int pmu_id) const {
    if (pmu_id < 2 || pmu_id > placement_.n_pmus()) {
        throw IdentifyError("identify: PMU id " + std::to_string(pmu_id) +
                            " out of range (the substation PMU is assumed secure)");
    }
    return datasets_[static_cast<std::size_t>(pmu_id - 2)];
}

JacobianBundle Identifier::build_dataset_bundle(int pmu_id, const MeasurementSet& mset) const {
    const auto& ds = dataset_rows(pmu_id);
    return build_jacobian_subset(model_, placement_, mset, ds.rows);
}

linalg::Vec Identifier::gather(const MeasurementSet& mset, const TestDatasetRows& ds) const {
    linalg::Vec z(ds.rows.size());
    for (std::size_t i = 0; i < ds.rows.size(); ++i) {
        z[i] = mset.values[static_cast<std::size_t>(ds.rows[i])];
    }
    return z;
}

namespace {

void rotate_subset(linalg::Vec& z, const TestDatasetRows& ds, double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    kernels::active().rotate_pairs(z.data() + ds.vi_begin,
                                   static_cast<std::size_t>(ds.vi_end - ds.vi_begin) / 2, c, s);
    kernels::active().rotate_pairs(z.data() + ds.ii_begin,
                                   static_cast<std::size_t>(ds.ii_end - ds.ii_begin) / 2, c, s);
}

ProbeCategory classify(double ratio_plus, double ratio_minus) {
    const bool up_plus = ratio_plus > 1.0;
    const bool up_minus = ratio_minus > 1.0;
    if (up_plus && up_minus) return ProbeCategory::NoAttack;
    if (!up_plus && !up_minus) return ProbeCategory::ExactlyPi;
    if (up_plus) return ProbeCategory::PositiveInterval;
    return ProbeCategory::NegativeInterval;
}

} // namespace

ProbeVerdict Identifier::probe(int pmu_id, const MeasurementSet& mset, double delta_theta) const {
    if (!(delta_theta > 2.0 * kPmuAngleErrorBound)) {
        throw IdentifyError("identify: probing signal must exceed twice the PMU angle error "
                            "bound (delta_theta > 0.02 rad)");
    }
    const auto& ds = dataset_rows(pmu_id);
    const JacobianBundle bundle = build_dataset_bundle(pmu_id, mset);
    const linalg::Vec z0 = gather(mset, ds);

    ProbeVerdict v;
    v.pmu = pmu_id;
    v.j = objective(z0, bundle);

    linalg::Vec z = z0;
    rotate_subset(z, ds, delta_theta);
    v.j_plus = objective(z, bundle);

    z = z0;
    rotate_subset(z, ds, -delta_theta);
    v.j_minus = objective(z, bundle);

    const double base = std::max(v.j, 1e-15);
    const double rp = v.j_plus / base;
    const double rm = v.j_minus / base;
    v.category = classify(rp, rm);
    v.attacked = v.category != ProbeCategory::NoAttack;
    v.low_confidence = std::abs(rp - 1.0) < 0.01 || std::abs(rm - 1.0) < 0.01;
    return v;
}

IdentificationResult Identifier::identify_all(const MeasurementSet& mset,
                                              double delta_theta) const {
    IdentificationResult res;
    for (int i = 2; i <= placement_.n_pmus(); ++i) {
        res.verdicts.push_back(probe(i, mset, delta_theta));
    }
    for (const auto& v : res.verdicts) {
        switch (v.category) {
            case ProbeCategory::ExactlyPi: res.p1.push_back(v.pmu); break;
            case ProbeCategory::PositiveInterval: res.p2.push_back(v.pmu); break;
            case ProbeCategory::NegativeInterval: res.p3.push_back(v.pmu); break;
            case ProbeCategory::NoAttack: break;
        }
    }
    return res;
}

std::vector<std::pair<double, double>> Identifier::sweep_objective(
    int pmu_id, const MeasurementSet& mset, const std::vector<double>& grid) const {
    const auto& ds = dataset_rows(pmu_id);
    const JacobianBundle bundle = build_dataset_bundle(pmu_id, mset);
    const linalg::Vec z0 = gather(mset, ds);

    std::vector<std::pair<double, double>> curve;
    curve.reserve(grid.size());
    linalg::Vec z;
    for (double theta : grid) {
        z = z0;
        rotate_subset(z, ds, theta);
        curve.emplace_back(theta, objective(z, bundle));
    }
    return curve;
}

} // namespace gsa
