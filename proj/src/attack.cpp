#include "gsa/attack.hpp"

#include <cmath>
#include <string>

namespace gsa {

std::array<double, 4> rotation_block(double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    return {c, -s, s, c};
}

double canonical_angle(double theta) {
    double t = std::remainder(theta, 2.0 * M_PI); // [-pi, pi]
    if (t <= -M_PI) t = M_PI;
    return t;
}

double angle_distance(double a, double b) {
    return std::abs(canonical_angle(a - b));
}

void rotate_pmu_entries(MeasurementSet& mset, int pmu_index, double theta) {
    if (pmu_index < 0 || pmu_index >= static_cast<int>(mset.pmu_spans.size())) {
        throw AttackError("attack: unknown PMU index " + std::to_string(pmu_index + 1));
    }
    const double c = std::cos(theta), s = std::sin(theta);
    const auto& span = mset.pmu_spans[static_cast<std::size_t>(pmu_index)];
    auto rotate = [&](int begin, int end) {
        if (end > begin) {
            kernels::active().rotate_pairs(mset.values.data() + begin,
                                           static_cast<std::size_t>(end - begin) / 2, c, s);
        }
    };
    rotate(span.v_begin, span.v_end);
    rotate(span.i_begin, span.i_end);
}

MeasurementSet apply_gsa(const MeasurementSet& z, const AttackProfile& profile) {
    if (profile.size() != static_cast<int>(z.pmu_spans.size())) {
        throw AttackError("attack: profile covers " + std::to_string(profile.size()) +
                          " PMUs, measurement set has " + std::to_string(z.pmu_spans.size()));
    }
    MeasurementSet out = z;
    for (int i = 0; i < profile.size(); ++i) {
        const double theta = profile.theta[static_cast<std::size_t>(i)];
        if (theta != 0.0) rotate_pmu_entries(out, i, theta);
    }
    return out;
}

MeasurementSet correct_measurements(const MeasurementSet& z_spf, const AttackProfile& theta_hat) {
    if (theta_hat.size() != static_cast<int>(z_spf.pmu_spans.size())) {
        throw AttackError("attack: correction profile size mismatch");
    }
    MeasurementSet out = z_spf;
    for (int i = 0; i < theta_hat.size(); ++i) {
        const double theta = theta_hat.theta[static_cast<std::size_t>(i)];
        if (theta != 0.0) rotate_pmu_entries(out, i, -theta);
    }
    return out;
}

} // namespace gsa
