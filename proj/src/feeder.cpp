#include "gsa/feeder.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace gsa {

using nlohmann::json;

namespace {

constexpr double kFeetPerMile = 5280.0;
// Q/P for the fixed 0.95 DG power factor
const double kDgTanPhi = std::tan(std::acos(0.95));

struct RawBranch {
    int from = 0;
    int to = 0;
    double length_ft = 0.0;
    std::string config;
    PhaseMask phases;
};

struct RawLoad {
    int bus = 0;
    Phase phase = Phase::A;
    double kw = 0.0;
    double kvar = 0.0;
    bool is_dg = false;
};

[[noreturn]] void fail(const std::string& msg) { throw FeederError("feeder: " + msg); }

Phase parse_phase(const std::string& s) {
    if (s == "a" || s == "A") return Phase::A;
    if (s == "b" || s == "B") return Phase::B;
    if (s == "c" || s == "C") return Phase::C;
    fail("unknown phase '" + s + "'");
}

} // namespace

char phase_letter(Phase p) {
    switch (p) {
        case Phase::A: return 'a';
        case Phase::B: return 'b';
        case Phase::C: return 'c';
    }
    return '?';
}

PhaseMask PhaseMask::from_string(const std::string& s) {
    PhaseMask m;
    for (char c : s) {
        switch (c) {
            case 'a': case 'A': m.set(Phase::A); break;
            case 'b': case 'B': m.set(Phase::B); break;
            case 'c': case 'C': m.set(Phase::C); break;
            default: fail(std::string("invalid phase character '") + c + "'");
        }
    }
    if (m.bits == 0) fail("empty phase mask");
    return m;
}

std::string PhaseMask::to_string() const {
    std::string s;
    for (Phase p : kPhases) {
        if (has(p)) s += phase_letter(p);
    }
    return s;
}

int PhaseMask::count() const {
    int n = 0;
    for (Phase p : kPhases) n += has(p) ? 1 : 0;
    return n;
}

const Bus& FeederModel::bus(int external_id) const {
    return buses[static_cast<std::size_t>(index_of(external_id))];
}

int FeederModel::index_of(int external_id) const {
    auto it = bus_index.find(external_id);
    if (it == bus_index.end()) fail("unknown bus id " + std::to_string(external_id));
    return it->second;
}

std::vector<int> path_to_bus(const FeederModel& model, int bus_id) {
    std::vector<int> path;
    int idx = model.index_of(bus_id);
    while (model.parent_branch[static_cast<std::size_t>(idx)] != 0) {
        const int bid = model.parent_branch[static_cast<std::size_t>(idx)];
        path.push_back(bid);
        idx = model.index_of(model.branch(bid).from_bus);
    }
    std::reverse(path.begin(), path.end());
    return path;
}

FeederModel parse_feeder(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(std::string("invalid JSON: ") + e.what());
    }

    FeederModel model;
    try {
        model.base_kv = j.at("base_kv").get<double>();
        model.base_kva = j.at("base_kva").get<double>();
        model.slack_bus = j.at("slack").get<int>();
    } catch (const json::exception& e) {
        fail(std::string("missing or malformed header field: ") + e.what());
    }
    if (model.base_kv <= 0.0 || model.base_kva <= 0.0) fail("system base must be positive");

    for (auto& [id, cfg] : j.at("line_configs").items()) {
        LineConfig lc;
        const auto& r = cfg.at("r");
        const auto& x = cfg.at("x");
        if (r.size() != 9 || x.size() != 9) fail("line config '" + id + "' must have 9 R and 9 X entries");
        for (int i = 0; i < 9; ++i) {
            lc.r_per_mile[static_cast<std::size_t>(i)] = r[static_cast<std::size_t>(i)].get<double>();
            lc.x_per_mile[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)].get<double>();
        }
        model.line_configs[id] = lc;
    }

    std::vector<RawBranch> raw;
    for (const auto& b : j.at("branches")) {
        RawBranch rb;
        rb.from = b.at("from").get<int>();
        rb.to = b.at("to").get<int>();
        rb.length_ft = b.at("length_ft").get<double>();
        rb.config = b.at("config").is_string() ? b.at("config").get<std::string>()
                                               : std::to_string(b.at("config").get<int>());
        rb.phases = PhaseMask::from_string(b.at("phases").get<std::string>());
        if (rb.length_ft <= 0.0) {
            fail("branch " + std::to_string(rb.from) + "-" + std::to_string(rb.to) +
                 ": length must be positive");
        }
        raw.push_back(rb);
    }
    if (raw.empty()) fail("no branches");

    std::vector<RawLoad> loads;
    if (j.contains("loads")) {
        for (const auto& l : j.at("loads")) {
            RawLoad rl;
            rl.bus = l.at("bus").get<int>();
            rl.phase = parse_phase(l.at("phase").get<std::string>());
            rl.kw = l.at("kw").get<double>();
            rl.kvar = l.at("kvar").get<double>();
            rl.is_dg = l.contains("kind") && l.at("kind").get<std::string>() == "dg";
            loads.push_back(rl);
        }
    }

    // Collect bus ids and adjacency over the raw (unoriented) branches.
    std::set<int> bus_ids;
    bus_ids.insert(model.slack_bus);
    for (const auto& rb : raw) {
        bus_ids.insert(rb.from);
        bus_ids.insert(rb.to);
    }
    std::map<int, std::vector<int>> adj; // bus id -> raw branch indices
    for (std::size_t i = 0; i < raw.size(); ++i) {
        adj[raw[i].from].push_back(static_cast<int>(i));
        adj[raw[i].to].push_back(static_cast<int>(i));
    }

    // BFS from the slack: orients branches, detects cycles, fixes the
    // deterministic branch ordering (level order, ties by ascending to_bus).
    std::map<int, bool> visited;
    for (int id : bus_ids) visited[id] = false;
    visited[model.slack_bus] = true;

    std::vector<int> ordered_raw; // raw indices in BFS order, already oriented
    std::deque<int> frontier{model.slack_bus};
    std::vector<char> used(raw.size(), 0);
    while (!frontier.empty()) {
        const int bus = frontier.front();
        frontier.pop_front();
        std::vector<std::pair<int, int>> out; // (neighbor, raw idx)
        for (int ri : adj[bus]) {
            if (used[static_cast<std::size_t>(ri)]) continue;
            auto& rb = raw[static_cast<std::size_t>(ri)];
            const int other = rb.from == bus ? rb.to : rb.from;
            if (visited[other]) {
                fail("cycle detected at branch " + std::to_string(rb.from) + "-" +
                     std::to_string(rb.to));
            }
            if (rb.from != bus) std::swap(rb.from, rb.to); // orient away from the slack
            out.emplace_back(other, ri);
        }
        std::sort(out.begin(), out.end());
        for (auto [other, ri] : out) {
            used[static_cast<std::size_t>(ri)] = 1;
            visited[other] = true;
            ordered_raw.push_back(ri);
            frontier.push_back(other);
        }
    }
    for (const auto& [id, seen] : visited) {
        if (!seen) fail("disconnected bus " + std::to_string(id));
    }

    // Bus table, ascending external id.
    for (int id : bus_ids) {
        Bus b;
        b.id = id;
        model.bus_index[id] = static_cast<int>(model.buses.size());
        model.buses.push_back(b);
    }

    const double z_base = model.z_base_ohm();
    model.branches.reserve(ordered_raw.size());
    for (std::size_t k = 0; k < ordered_raw.size(); ++k) {
        const auto& rb = raw[static_cast<std::size_t>(ordered_raw[k])];
        Branch br;
        br.id = static_cast<int>(k) + 1;
        br.from_bus = rb.from;
        br.to_bus = rb.to;
        br.phases = rb.phases;
        br.length_ft = rb.length_ft;
        br.config = rb.config;

        auto cfg = model.line_configs.find(rb.config);
        if (cfg == model.line_configs.end()) {
            fail("unknown line configuration '" + rb.config + "' on branch " +
                 std::to_string(rb.from) + "-" + std::to_string(rb.to));
        }
        const double miles = rb.length_ft / kFeetPerMile;
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) {
                const auto i = static_cast<std::size_t>(3 * r + c);
                Complex z{cfg->second.r_per_mile[i] * miles, cfg->second.x_per_mile[i] * miles};
                const bool present = br.phases.has(static_cast<Phase>(r)) &&
                                     br.phases.has(static_cast<Phase>(c));
                br.z_ohm.z[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] =
                    present ? z : Complex{};
                br.z_pu.z[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] =
                    present ? z / z_base : Complex{};
            }
        }
        for (Phase p : kPhases) {
            if (!br.phases.has(p)) continue;
            if (br.z_ohm.at(p, p).real() <= 0.0) {
                fail("config '" + rb.config + "': non-positive series resistance on phase " +
                     std::string(1, phase_letter(p)) + " (branch " + std::to_string(rb.from) +
                     "-" + std::to_string(rb.to) + ")");
            }
            for (Phase q : kPhases) {
                if (std::abs(br.z_ohm.at(p, q) - br.z_ohm.at(q, p)) > 1e-9) {
                    fail("config '" + rb.config + "': impedance matrix not symmetric");
                }
            }
        }
        model.branches.push_back(br);
    }

    // Topology indexes and phase masks. A bus inherits the mask of the branch
    // feeding it; child branches must not introduce phases their parent lacks.
    model.parent_branch.assign(model.buses.size(), 0);
    model.child_branches.assign(model.buses.size(), {});
    for (const auto& br : model.branches) {
        const int ti = model.index_of(br.to_bus);
        const int fi = model.index_of(br.from_bus);
        model.parent_branch[static_cast<std::size_t>(ti)] = br.id;
        model.child_branches[static_cast<std::size_t>(fi)].push_back(br.id);
        model.buses[static_cast<std::size_t>(ti)].phases = br.phases;
    }
    {
        auto& slack = model.buses[static_cast<std::size_t>(model.index_of(model.slack_bus))];
        for (int bid : model.child_branches[static_cast<std::size_t>(model.index_of(model.slack_bus))]) {
            slack.phases.bits |= model.branch(bid).phases.bits;
        }
    }
    for (const auto& br : model.branches) {
        const auto& from = model.bus(br.from_bus);
        if (!br.phases.subset_of(from.phases)) {
            fail("phase-mask violation: branch " + std::to_string(br.from_bus) + "-" +
                 std::to_string(br.to_bus) + " (" + br.phases.to_string() +
                 ") exceeds phases of bus " + std::to_string(br.from_bus) + " (" +
                 from.phases.to_string() + ")");
        }
    }

    // Loads and DG, converted to per-unit on the per-phase base.
    const double s_base = model.s_base_phase_kva();
    for (const auto& rl : loads) {
        auto it = model.bus_index.find(rl.bus);
        if (it == model.bus_index.end()) fail("load references unknown bus " + std::to_string(rl.bus));
        Bus& b = model.buses[static_cast<std::size_t>(it->second)];
        if (!b.phases.has(rl.phase)) {
            fail("load on absent phase " + std::string(1, phase_letter(rl.phase)) + " of bus " +
                 std::to_string(rl.bus));
        }
        if (rl.is_dg) {
            if (std::abs(rl.kvar - rl.kw * kDgTanPhi) > 0.01 * std::abs(rl.kw) + 1e-9) {
                fail("DG at bus " + std::to_string(rl.bus) +
                     " violates the 0.95 power factor (expected kvar = kw * tan(acos 0.95))");
            }
            b.dg_pu[static_cast<std::size_t>(rl.phase)] += Complex{rl.kw, rl.kvar} / s_base;
        } else {
            b.load_pu[static_cast<std::size_t>(rl.phase)] += Complex{rl.kw, rl.kvar} / s_base;
        }
    }

    // Slack voltage: balanced unit phasors unless overridden.
    model.slack_voltage = {Complex{1.0, 0.0},
                           std::polar(1.0, -2.0 * M_PI / 3.0),
                           std::polar(1.0, 2.0 * M_PI / 3.0)};
    if (j.contains("slack_voltage_pu")) {
        const auto& sv = j.at("slack_voltage_pu");
        if (sv.size() != 3) fail("slack_voltage_pu must list [mag, angle_deg] for a, b, c");
        for (int p = 0; p < 3; ++p) {
            model.slack_voltage[static_cast<std::size_t>(p)] =
                std::polar(sv[static_cast<std::size_t>(p)][0].get<double>(),
                           sv[static_cast<std::size_t>(p)][1].get<double>() * M_PI / 180.0);
        }
    }
    const auto& slack = model.bus(model.slack_bus);
    for (Phase p : kPhases) {
        if (!slack.phases.has(p)) model.slack_voltage[static_cast<std::size_t>(p)] = Complex{};
    }

    return model;
}

FeederModel load_feeder_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open feeder file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_feeder(ss.str());
}

std::string serialize_feeder(const FeederModel& model) {
    json j;
    j["base_kv"] = model.base_kv;
    j["base_kva"] = model.base_kva;
    j["slack"] = model.slack_bus;

    json cfgs = json::object();
    for (const auto& [id, cfg] : model.line_configs) {
        cfgs[id] = {{"r", cfg.r_per_mile}, {"x", cfg.x_per_mile}};
    }
    j["line_configs"] = cfgs;

    json branches = json::array();
    for (const auto& br : model.branches) {
        branches.push_back({{"from", br.from_bus},
                            {"to", br.to_bus},
                            {"length_ft", br.length_ft},
                            {"config", br.config},
                            {"phases", br.phases.to_string()}});
    }
    j["branches"] = branches;

    const double s_base = model.s_base_phase_kva();
    json loads = json::array();
    for (const auto& b : model.buses) {
        for (Phase p : kPhases) {
            const auto i = static_cast<std::size_t>(p);
            if (b.load_pu[i] != Complex{}) {
                loads.push_back({{"bus", b.id},
                                 {"phase", std::string(1, phase_letter(p))},
                                 {"kw", b.load_pu[i].real() * s_base},
                                 {"kvar", b.load_pu[i].imag() * s_base},
                                 {"kind", "load"}});
            }
            if (b.dg_pu[i] != Complex{}) {
                loads.push_back({{"bus", b.id},
                                 {"phase", std::string(1, phase_letter(p))},
                                 {"kw", b.dg_pu[i].real() * s_base},
                                 {"kvar", b.dg_pu[i].imag() * s_base},
                                 {"kind", "dg"}});
            }
        }
    }
    j["loads"] = loads;

    return j.dump(2);
}

} // namespace gsa
