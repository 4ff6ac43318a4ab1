#pragma once

#include <array>
#include <stdexcept>
#include <vector>

#include "gsa/measurement.hpp"

namespace gsa {

/// Per-PMU spoof phase shifts in rad, indexed by device id - 1. The
/// substation PMU (id 1) is secure; its entry is forced to zero. Angles are
/// arbitrary reals, interpreted mod 2pi.
struct AttackProfile {
    std::vector<double> theta;

    AttackProfile() = default;
    explicit AttackProfile(std::vector<double> angles) : theta(std::move(angles)) {
        if (!theta.empty()) theta[0] = 0.0;
    }
    static AttackProfile none(int n_pmus) { return AttackProfile(std::vector<double>(static_cast<std::size_t>(n_pmus), 0.0)); }

    int size() const { return static_cast<int>(theta.size()); }
};

class AttackError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Proper rotation [[cos, -sin], [sin, cos]], row-major.
std::array<double, 4> rotation_block(double theta);

/// Wraps an angle to (-pi, pi].
double canonical_angle(double theta);

/// Wrap-aware absolute distance between two angles.
double angle_distance(double a, double b);

/// Rotates every (re, im) pair of one PMU's voltage and current entries by
/// theta, in place. Meter entries and variances are untouched.
void rotate_pmu_entries(MeasurementSet& mset, int pmu_index, double theta);

/// Spoofed copy of z: each PMU's phasors rotated by its profile angle.
MeasurementSet apply_gsa(const MeasurementSet& z, const AttackProfile& profile);

/// Inverse correction: rotates each PMU's pairs by -theta_hat.
MeasurementSet correct_measurements(const MeasurementSet& z_spf, const AttackProfile& theta_hat);

} // namespace gsa
