#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "gsa/feeder.hpp"
#include "gsa/linalg.hpp"
#include "gsa/measurement.hpp"

namespace gsa {

/// Layout of the real state vector: slack voltage components (re, im per
/// present phase) followed by branch current components (re, im per present
/// phase) in BFS branch order.
struct StateLayout {
    int n = 0;
    std::array<int, 3> slack_off{-1, -1, -1};       // re index per phase; im = re + 1
    std::vector<std::array<int, 3>> branch_off;     // [branch id - 1][phase] -> re index

    static StateLayout build(const FeederModel& model);
    std::string describe_column(const FeederModel& model, int col) const;
};

/// Constant-Jacobian machinery for one (placement, measurement ordering):
/// H, the weights, the gain matrix G = H'WH, the residual sensitivity
/// projector K = I - H G^-1 H' W, and a reusable QR factorization of
/// W^(1/2) H that backs all solves. Immutable and shareable across threads.
struct JacobianBundle {
    StateLayout layout;
    linalg::Mat H;     // m x n
    linalg::Vec W;     // diagonal weights, 1/variance
    linalg::Vec sqrt_w;
    linalg::Mat G;     // n x n
    linalg::Mat K;     // m x m
    linalg::Mat Qt;    // n x m, Q' of the thin QR of W^(1/2) H
    linalg::Mat R;     // n x n upper triangular

    int m() const { return static_cast<int>(H.rows()); }
    int n() const { return static_cast<int>(H.cols()); }

    /// WLS solution argmin ||W^(1/2)(z - Hx)||.
    linalg::Vec solve(const linalg::Vec& z) const;
    /// y = H x
    linalg::Vec predict(const linalg::Vec& x) const;
};

class EstimatorError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

JacobianBundle build_jacobian(const FeederModel& model, const Placement& placement,
                              const MeasurementSet& mset);

/// Builds a bundle for a row subset of a full measurement ordering (the
/// per-PMU test datasets). `rows` index into `mset.entries`.
JacobianBundle build_jacobian_subset(const FeederModel& model, const Placement& placement,
                                     const MeasurementSet& mset, const std::vector<int>& rows);

struct EstimateResult {
    linalg::Vec x;
    std::vector<std::array<Complex, 3>> bus_voltage; // derived by forward sweep
    linalg::Vec residual;                            // z - H x at the final linearization
    double J = 0.0;                                  // r' W r
    int iterations = 0;
    bool converged = false;
    double kz_agreement = 0.0; // max |(z - H x) - K z|, linear path only
};

/// Iterative WLS: alternates the closed-form state update with forward-sweep
/// voltage updates and meter re-linearization. Initial state from a backward
/// sweep of the slack-linearized meter currents.
EstimateResult estimate_iterative(const FeederModel& model, const MeasurementSet& mset,
                                  const JacobianBundle& bundle, double tol = 1e-6,
                                  int max_iter = 50);

/// One-shot closed-form estimate; meter entries must already be linearized
/// at the slack voltage.
EstimateResult estimate_linear(const FeederModel& model, const MeasurementSet& mset,
                               const JacobianBundle& bundle);

/// J = (Kz)' W (Kz), the closed-form weighted residual objective.
double objective(const linalg::Vec& z, const JacobianBundle& bundle);
double objective(const MeasurementSet& mset, const JacobianBundle& bundle);

/// Bus voltages implied by a state vector (slack voltage + KVL forward sweep).
std::vector<std::array<Complex, 3>> voltages_from_state(const FeederModel& model,
                                                        const StateLayout& layout,
                                                        const linalg::Vec& x);

} // namespace gsa
