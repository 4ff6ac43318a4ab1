#pragma once

#include <stdexcept>
#include <vector>

#include "gsa/feeder.hpp"

namespace gsa {

/// Converged three-phase operating point, indexed like FeederModel::buses and
/// FeederModel::branches. Entries of absent phases are zero.
struct TrueState {
    std::vector<std::array<Complex, 3>> bus_voltage;    // p.u.
    std::vector<std::array<Complex, 3>> branch_current; // p.u.
    int iterations = 0;
    double max_mismatch = 0.0;

    Complex voltage(const FeederModel& m, int bus_id, Phase p) const {
        return bus_voltage[static_cast<std::size_t>(m.index_of(bus_id))][static_cast<std::size_t>(p)];
    }
    Complex current(int branch_id, Phase p) const {
        return branch_current[static_cast<std::size_t>(branch_id - 1)][static_cast<std::size_t>(p)];
    }
};

struct PowerFlowOptions {
    double tol = 1e-8; // max |dV| per sweep, p.u.
    int max_iter = 100;
};

class PowerFlowError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Backward/forward sweep for radial feeders with constant-PQ loads and DG
/// as negative load. Pure function of its inputs.
TrueState solve_power_flow(const FeederModel& model, const PowerFlowOptions& opts = {});

/// V_to = V_from - Z_p * I_p over the branch's phase mask.
std::array<Complex, 3> propagate_voltage(const Branch& br, const std::array<Complex, 3>& v_from,
                                         const std::array<Complex, 3>& i_branch);

} // namespace gsa
