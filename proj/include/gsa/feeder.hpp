#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace gsa {

using Complex = std::complex<double>;

enum class Phase : int { A = 0, B = 1, C = 2 };

constexpr std::array<Phase, 3> kPhases{Phase::A, Phase::B, Phase::C};

char phase_letter(Phase p);

/// Subset of {a, b, c}. Never empty on a validated model.
struct PhaseMask {
    std::uint8_t bits = 0;

    static PhaseMask from_string(const std::string& s);
    std::string to_string() const;

    bool has(Phase p) const { return (bits >> static_cast<int>(p)) & 1; }
    void set(Phase p) { bits |= static_cast<std::uint8_t>(1u << static_cast<int>(p)); }
    int count() const;
    bool subset_of(PhaseMask other) const { return (bits & ~other.bits) == 0; }
    bool operator==(const PhaseMask&) const = default;
};

/// 3x3 complex series impedance for one segment; rows/columns of absent
/// phases are zero. Symmetric (z_ab == z_ba).
struct ImpedanceMatrix {
    std::array<std::array<Complex, 3>, 3> z{};

    Complex& at(Phase r, Phase c) { return z[static_cast<int>(r)][static_cast<int>(c)]; }
    Complex at(Phase r, Phase c) const { return z[static_cast<int>(r)][static_cast<int>(c)]; }
};

struct LineConfig {
    std::array<double, 9> r_per_mile{}; // row-major ohms/mile
    std::array<double, 9> x_per_mile{};
};

struct Branch {
    int id = 0; // 1-based BFS index
    int from_bus = 0;
    int to_bus = 0;
    PhaseMask phases;
    ImpedanceMatrix z_pu;   // per-unit on the system base
    ImpedanceMatrix z_ohm;  // total ohms for the segment
    double length_ft = 0.0;
    std::string config;
};

struct Bus {
    int id = 0;
    PhaseMask phases;
    std::array<Complex, 3> load_pu{};  // consumed S per phase, p.u.
    std::array<Complex, 3> dg_pu{};    // injected S per phase, p.u.

    bool has_injection(Phase p) const {
        const int i = static_cast<int>(p);
        return load_pu[i] != Complex{} || dg_pu[i] != Complex{};
    }
};

/// Radial unbalanced feeder. Immutable after parse_feeder; safe to share
/// across worker threads.
struct FeederModel {
    int slack_bus = 0;
    double base_kv = 0.0;  // line-to-line
    double base_kva = 0.0; // three-phase
    std::array<Complex, 3> slack_voltage{}; // per phase, p.u. line-to-neutral

    std::vector<Bus> buses;        // ascending external id
    std::vector<Branch> branches;  // BFS order from the slack, id = index + 1
    std::map<std::string, LineConfig> line_configs;

    std::unordered_map<int, int> bus_index;       // external id -> index into buses
    std::vector<int> parent_branch;               // per bus index; 0 for the slack
    std::vector<std::vector<int>> child_branches; // per bus index, ascending to_bus

    int n_buses() const { return static_cast<int>(buses.size()); }
    int n_branches() const { return static_cast<int>(branches.size()); }

    const Bus& bus(int external_id) const;
    int index_of(int external_id) const;
    const Branch& branch(int id) const { return branches[static_cast<std::size_t>(id - 1)]; }
    /// Branch whose to_bus is the given bus, or 0 for the slack.
    int branch_into(int external_id) const { return parent_branch[static_cast<std::size_t>(index_of(external_id))]; }

    /// Per-unit impedance base in ohms.
    double z_base_ohm() const { return 1000.0 * base_kv * base_kv / base_kva; }
    /// Per-phase power base in kVA (line-to-neutral voltage base).
    double s_base_phase_kva() const { return base_kva / 3.0; }
};

class FeederError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

FeederModel parse_feeder(const std::string& text);
FeederModel load_feeder_file(const std::string& path);
std::string serialize_feeder(const FeederModel& model);

/// Ordered branch ids along the unique slack-to-bus path; empty for the slack.
std::vector<int> path_to_bus(const FeederModel& model, int bus_id);

} // namespace gsa
