#include "gsa/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace gsa {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ScenarioError("scenario: " + msg); }

} // namespace

ScenarioConfig parse_scenario(const std::string& json_text, const std::string& base_dir) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        fail(std::string("invalid JSON: ") + e.what());
    }

    ScenarioConfig cfg;
    try {
        const std::string feeder = j.at("feeder").get<std::string>();
        std::filesystem::path p(feeder);
        cfg.feeder_path = p.is_absolute() || base_dir.empty()
                              ? feeder
                              : (std::filesystem::path(base_dir) / p).string();

        for (const auto& pm : j.at("pmus")) {
            if (pm.is_number_integer()) {
                cfg.pmu_buses.push_back(pm.get<int>());
                cfg.pmu_branch_buses.emplace_back();
            } else {
                cfg.pmu_buses.push_back(pm.at("bus").get<int>());
                std::vector<int> branches;
                if (pm.contains("branches")) {
                    for (const auto& b : pm.at("branches")) branches.push_back(b.get<int>());
                }
                cfg.pmu_branch_buses.push_back(std::move(branches));
            }
        }

        if (j.contains("meters")) {
            if (j.at("meters").is_string()) {
                if (j.at("meters").get<std::string>() != "all") {
                    fail("meters must be \"all\" or a list of bus ids");
                }
                cfg.meters_all = true;
            } else {
                cfg.meters_all = false;
                for (const auto& b : j.at("meters")) cfg.meter_buses.push_back(b.get<int>());
                std::sort(cfg.meter_buses.begin(), cfg.meter_buses.end());
            }
        }

        if (j.contains("noise")) {
            const auto& n = j.at("noise");
            if (n.contains("pmu_mag_max")) cfg.noise.pmu_mag_max = n.at("pmu_mag_max").get<double>();
            if (n.contains("pmu_angle_max")) cfg.noise.pmu_angle_max = n.at("pmu_angle_max").get<double>();
            if (n.contains("meter_power_max")) cfg.noise.meter_power_max = n.at("meter_power_max").get<double>();
        }
        if (cfg.noise.pmu_mag_max <= 0.0 || cfg.noise.pmu_angle_max <= 0.0 ||
            cfg.noise.meter_power_max <= 0.0) {
            fail("noise maxima must be positive");
        }

        if (j.contains("psi")) {
            for (const auto& v : j.at("psi")) cfg.psi_pi.push_back(v.get<double>());
        } else {
            cfg.psi_pi.assign(cfg.pmu_buses.size(), 0.0);
        }

        if (j.contains("delta_theta")) cfg.delta_theta = j.at("delta_theta").get<double>();
        if (j.contains("trials")) cfg.trials = j.at("trials").get<int>();
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("correction")) cfg.run_correction = j.at("correction").get<bool>();
        if (j.contains("jobs")) cfg.jobs = j.at("jobs").get<int>();
        if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();

        if (j.contains("pso")) {
            const auto& p = j.at("pso");
            if (p.contains("swarm_size")) cfg.pso.swarm_size = p.at("swarm_size").get<int>();
            if (p.contains("inertia")) cfg.pso.inertia = p.at("inertia").get<double>();
            if (p.contains("cognitive")) cfg.pso.cognitive = p.at("cognitive").get<double>();
            if (p.contains("social")) cfg.pso.social = p.at("social").get<double>();
            if (p.contains("max_iters")) cfg.pso.max_iters = p.at("max_iters").get<int>();
            if (p.contains("stall_iters")) cfg.pso.stall_iters = p.at("stall_iters").get<int>();
            if (p.contains("stall_tol")) cfg.pso.stall_tol = p.at("stall_tol").get<double>();
            if (p.contains("velocity_clamp")) cfg.pso.velocity_clamp = p.at("velocity_clamp").get<double>();
            if (p.contains("seed")) cfg.pso.seed = p.at("seed").get<std::uint64_t>();
        }
    } catch (const json::exception& e) {
        fail(std::string("malformed field: ") + e.what());
    }

    if (cfg.pmu_buses.empty()) fail("pmus must list at least the substation PMU");
    if (cfg.psi_pi.size() != cfg.pmu_buses.size()) {
        fail("psi must have one entry per PMU (" + std::to_string(cfg.pmu_buses.size()) +
             "), got " + std::to_string(cfg.psi_pi.size()));
    }
    if (cfg.psi_pi.front() != 0.0) fail("psi[0] must be 0: the substation PMU is secure");
    if (!(cfg.delta_theta > 0.02)) fail("delta_theta must exceed 0.02 rad");
    if (cfg.trials < 1) fail("trials must be >= 1");
    if (cfg.pso.swarm_size < 2) fail("pso.swarm_size must be >= 2");
    if (cfg.pso.inertia <= 0.0 || cfg.pso.inertia >= 1.0) fail("pso.inertia must lie in (0, 1)");
    return cfg;
}

ScenarioConfig load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open scenario file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), std::filesystem::path(path).parent_path().string());
}

Placement placement_from_config(const FeederModel& model, const ScenarioConfig& cfg) {
    Placement pl = default_placement(model, cfg.pmu_buses);
    for (std::size_t i = 0; i < cfg.pmu_branch_buses.size(); ++i) {
        const auto& to_buses = cfg.pmu_branch_buses[i];
        if (to_buses.empty()) continue;
        std::vector<int> branches;
        for (int tb : to_buses) {
            const int bid = model.branch_into(tb);
            if (bid == 0) fail("pmu branch reference: bus " + std::to_string(tb) + " has no feeding branch");
            branches.push_back(bid);
        }
        std::sort(branches.begin(), branches.end());
        pl.pmus[i].branches = std::move(branches);
    }
    if (!cfg.meters_all) pl.smart_meter_buses = cfg.meter_buses;
    validate_placement(model, pl);
    return pl;
}

AttackProfile profile_from_config(const ScenarioConfig& cfg) {
    std::vector<double> theta(cfg.psi_pi.size());
    for (std::size_t i = 0; i < cfg.psi_pi.size(); ++i) theta[i] = cfg.psi_pi[i] * M_PI;
    return AttackProfile(std::move(theta));
}

} // namespace gsa
