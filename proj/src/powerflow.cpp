#include "gsa/powerflow.hpp"

#include <cmath>
#include <string>

namespace gsa {

std::array<Complex, 3> propagate_voltage(const Branch& br, const std::array<Complex, 3>& v_from,
                                         const std::array<Complex, 3>& i_branch) {
    std::array<Complex, 3> v_to{};
    for (Phase p : kPhases) {
        if (!br.phases.has(p)) continue;
        Complex drop{};
        for (Phase q : kPhases) {
            if (!br.phases.has(q)) continue;
            drop += br.z_pu.at(p, q) * i_branch[static_cast<std::size_t>(q)];
        }
        v_to[static_cast<std::size_t>(p)] = v_from[static_cast<std::size_t>(p)] - drop;
    }
    return v_to;
}

TrueState solve_power_flow(const FeederModel& model, const PowerFlowOptions& opts) {
    if (opts.tol <= 0.0) throw PowerFlowError("power flow: tol must be positive");

    const auto nb = static_cast<std::size_t>(model.n_buses());
    TrueState st;
    st.bus_voltage.assign(nb, {});
    st.branch_current.assign(static_cast<std::size_t>(model.n_branches()), {});

    const int slack_idx = model.index_of(model.slack_bus);
    for (auto& v : st.bus_voltage) v = model.slack_voltage;
    st.bus_voltage[static_cast<std::size_t>(slack_idx)] = model.slack_voltage;

    std::vector<std::array<Complex, 3>> injection(nb);
    for (int it = 1; it <= opts.max_iter; ++it) {
        // Nodal injection currents from constant-PQ loads at the latest voltages,
        // I = conj(S_net / V), with DG as negative load.
        for (std::size_t b = 0; b < nb; ++b) {
            const Bus& bus = model.buses[b];
            for (Phase p : kPhases) {
                const auto ip = static_cast<std::size_t>(p);
                injection[b][ip] = Complex{};
                if (!bus.phases.has(p)) continue;
                const Complex s = bus.load_pu[ip] - bus.dg_pu[ip];
                if (s == Complex{}) continue;
                const Complex v = st.bus_voltage[b][ip];
                if (std::abs(v) < 1e-9) {
                    throw PowerFlowError("power flow: vanishing voltage at bus " +
                                         std::to_string(bus.id));
                }
                injection[b][ip] = std::conj(s / v);
            }
        }

        // Backward sweep: accumulate branch currents leaf to root.
        for (int k = model.n_branches(); k >= 1; --k) {
            const Branch& br = model.branch(k);
            const auto ti = static_cast<std::size_t>(model.index_of(br.to_bus));
            std::array<Complex, 3> cur = injection[ti];
            for (int cid : model.child_branches[ti]) {
                for (Phase p : kPhases) {
                    cur[static_cast<std::size_t>(p)] += st.current(cid, p);
                }
            }
            for (Phase p : kPhases) {
                st.branch_current[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(p)] =
                    br.phases.has(p) ? cur[static_cast<std::size_t>(p)] : Complex{};
            }
        }

        // Forward sweep: propagate voltages root to leaf.
        double max_dv = 0.0;
        for (int k = 1; k <= model.n_branches(); ++k) {
            const Branch& br = model.branch(k);
            const auto fi = static_cast<std::size_t>(model.index_of(br.from_bus));
            const auto ti = static_cast<std::size_t>(model.index_of(br.to_bus));
            const auto v_new = propagate_voltage(br, st.bus_voltage[fi],
                                                 st.branch_current[static_cast<std::size_t>(k - 1)]);
            for (Phase p : kPhases) {
                const auto ip = static_cast<std::size_t>(p);
                if (!br.phases.has(p)) continue;
                max_dv = std::max(max_dv, std::abs(v_new[ip] - st.bus_voltage[ti][ip]));
                st.bus_voltage[ti][ip] = v_new[ip];
                if (std::abs(v_new[ip]) < 0.5) {
                    throw PowerFlowError("power flow: infeasible load, |V| < 0.5 p.u. at bus " +
                                         std::to_string(br.to_bus));
                }
            }
        }

        st.iterations = it;
        st.max_mismatch = max_dv;
        if (max_dv < opts.tol) return st;
    }
    throw PowerFlowError("power flow: no convergence after " + std::to_string(opts.max_iter) +
                         " iterations (max mismatch " + std::to_string(st.max_mismatch) + " p.u.)");
}

} // namespace gsa
