#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gsa/correct.hpp"
#include "gsa/estimator.hpp"
#include "gsa/feeder.hpp"
#include "gsa/identify.hpp"
#include "gsa/metrics.hpp"
#include "gsa/powerflow.hpp"
#include "gsa/scenario.hpp"

namespace {

using nlohmann::json;
using namespace gsa;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

struct CommonArgs {
    std::string config_path;
    std::string feeder_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int trials = 0;
    double delta_theta = 0.0;
    int jobs = 0;
    std::string output_dir;
    bool no_timestamp = false;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool need_config) {
    auto* cfg = cmd->add_option("--config", a.config_path, "scenario JSON file");
    if (need_config) cfg->required();
    cmd->add_option("--feeder", a.feeder_path, "feeder JSON file (overrides the scenario)");
    cmd->add_option("--seed", a.seed, "base RNG seed")->each([&a](const std::string&) { a.seed_set = true; });
    cmd->add_option("--trials", a.trials, "Monte Carlo trial count");
    cmd->add_option("--delta-theta", a.delta_theta, "probing signal, rad");
    cmd->add_option("--jobs", a.jobs, "max concurrent trials (0 = all cores)");
    cmd->add_option("--output-dir", a.output_dir, "directory for CSV outputs");
    cmd->add_flag("--no-timestamp", a.no_timestamp, "omit the timestamp field from JSON output");
}

ScenarioConfig resolve_config(const CommonArgs& a) {
    ScenarioConfig cfg;
    if (!a.config_path.empty()) {
        cfg = load_scenario_file(a.config_path);
    } else if (!a.feeder_path.empty()) {
        cfg.feeder_path = a.feeder_path;
    } else {
        throw ScenarioError("scenario: --config or --feeder is required");
    }
    if (!a.feeder_path.empty()) cfg.feeder_path = a.feeder_path;
    if (a.seed_set) cfg.seed = a.seed;
    if (a.trials > 0) cfg.trials = a.trials;
    if (a.delta_theta > 0.0) cfg.delta_theta = a.delta_theta;
    if (a.jobs > 0) cfg.jobs = a.jobs;
    if (!a.output_dir.empty()) cfg.output_dir = a.output_dir;
    return cfg;
}

json rmse_json(const RmseTable& t) {
    json j;
    j["max_delta_v"] = t.max_delta_v;
    j["max_delta_theta"] = t.max_delta_theta;
    j["avg_delta_v"] = t.avg_delta_v;
    j["avg_delta_theta"] = t.avg_delta_theta;
    return j;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << content;
}

int cmd_validate(const CommonArgs& a) {
    const ScenarioConfig cfg = resolve_config(a);
    const FeederModel model = load_feeder_file(cfg.feeder_path);
    if (!a.config_path.empty()) {
        const Placement pl = placement_from_config(model, cfg);
        // a jacobian build performs the observability (rank) check
        const MeasurementSet layout = measurement_layout(model, pl);
        MeasurementSet probe = layout;
        for (auto& v : probe.variances) v = 1.0;
        build_jacobian(model, pl, probe);
        std::cout << "ok: feeder " << cfg.feeder_path << ", " << model.n_buses() << " buses, "
                  << model.n_branches() << " branches, " << pl.n_pmus() << " PMUs, m/n = "
                  << static_cast<double>(probe.size()) / StateLayout::build(model).n << "\n";
    } else {
        std::cout << "ok: feeder " << cfg.feeder_path << ", " << model.n_buses() << " buses, "
                  << model.n_branches() << " branches\n";
    }
    return kExitOk;
}

int cmd_powerflow(const CommonArgs& a) {
    const ScenarioConfig cfg = resolve_config(a);
    const FeederModel model = load_feeder_file(cfg.feeder_path);
    const TrueState st = solve_power_flow(model);
    std::cout << "bus,phase,vmag_pu,vang_rad\n";
    for (const auto& [bus, phase] : voltage_keys(model)) {
        const Complex v = st.voltage(model, bus, phase);
        std::printf("%d,%c,%.12g,%.12g\n", bus, phase_letter(phase), std::abs(v), std::arg(v));
    }
    return kExitOk;
}

int cmd_estimate(const CommonArgs& a) {
    const ScenarioConfig cfg = resolve_config(a);
    const FeederModel model = load_feeder_file(cfg.feeder_path);
    const Placement pl = placement_from_config(model, cfg);
    const TrueState truth = solve_power_flow(model);
    const MeasurementSet z = synthesize(model, truth, pl, cfg.noise, cfg.seed);
    const MeasurementSet z_spf = apply_gsa(z, profile_from_config(cfg));
    const JacobianBundle bundle = build_jacobian(model, pl, z_spf);
    const EstimateResult est = estimate_iterative(model, z_spf, bundle);
    if (!est.converged) {
        std::cerr << "estimate: no convergence after " << est.iterations << " iterations\n";
        return kExitRuntime;
    }
    std::cout << "bus,phase,vmag_pu,vang_rad\n";
    for (const auto& [bus, phase] : voltage_keys(model)) {
        const auto bi = static_cast<std::size_t>(model.index_of(bus));
        const Complex v = est.bus_voltage[bi][static_cast<std::size_t>(phase)];
        std::printf("%d,%c,%.12g,%.12g\n", bus, phase_letter(phase), std::abs(v), std::arg(v));
    }
    std::printf("J,%.12g\n", est.J);
    return kExitOk;
}

int cmd_attack(const CommonArgs& a) {
    const ScenarioConfig cfg = resolve_config(a);
    const FeederModel model = load_feeder_file(cfg.feeder_path);
    const Placement pl = placement_from_config(model, cfg);
    const TrueState truth = solve_power_flow(model);
    const MeasurementSet z = synthesize(model, truth, pl, cfg.noise, cfg.seed);
    const MeasurementSet z_spf = apply_gsa(z, profile_from_config(cfg));
    std::cout << "index,kind,pmu,bus,branch,phase,component,value,variance\n";
    static const char* kKind[] = {"pmu_voltage", "pmu_current", "meter_equiv_current"};
    for (int i = 0; i < z_spf.size(); ++i) {
        const auto& e = z_spf.entries[static_cast<std::size_t>(i)];
        std::printf("%d,%s,%d,%d,%d,%c,%s,%.17g,%.17g\n", i, kKind[static_cast<int>(e.kind)],
                    e.pmu, e.bus, e.branch, phase_letter(e.phase),
                    e.comp == Component::Re ? "re" : "im",
                    z_spf.values[static_cast<std::size_t>(i)],
                    z_spf.variances[static_cast<std::size_t>(i)]);
    }
    return kExitOk;
}

int cmd_identify(const CommonArgs& a) {
    const ScenarioConfig cfg = resolve_config(a);
    const FeederModel model = load_feeder_file(cfg.feeder_path);
    const Placement pl = placement_from_config(model, cfg);
    const TrueState truth = solve_power_flow(model);
    const MeasurementSet z = synthesize(model, truth, pl, cfg.noise, cfg.seed);
    const MeasurementSet z_spf = apply_gsa(z, profile_from_config(cfg));
    const Identifier identifier(model, pl);
    const IdentificationResult res = identifier.identify_all(z_spf, cfg.delta_theta);
    std::cout << "pmu,j,j_plus,j_minus,ratio_plus,ratio_minus,category,low_confidence\n";
    for (const auto& v : res.verdicts) {
        std::printf("%d,%.12g,%.12g,%.12g,%.9g,%.9g,%s,%d\n", v.pmu, v.j, v.j_plus, v.j_minus,
                    v.j_plus / v.j, v.j_minus / v.j, to_string(v.category),
                    v.low_confidence ? 1 : 0);
    }
    auto set_str = [](const std::vector<int>& s) {
        std::string out;
        for (int i : s) out += (out.empty() ? "" : " ") + std::to_string(i);
        return out;
    };
    std::printf("# P1 = {%s}, P2 = {%s}, P3 = {%s}\n", set_str(res.p1).c_str(),
                set_str(res.p2).c_str(), set_str(res.p3).c_str());
    return kExitOk;
}

int cmd_sweep(const CommonArgs& a, int pmu, double grid_deg) {
    const ScenarioConfig cfg = resolve_config(a);
    const FeederModel model = load_feeder_file(cfg.feeder_path);
    const Placement pl = placement_from_config(model, cfg);
    const TrueState truth = solve_power_flow(model);
    const MeasurementSet z = synthesize(model, truth, pl, cfg.noise, cfg.seed);
    const MeasurementSet z_spf = apply_gsa(z, profile_from_config(cfg));
    const Identifier identifier(model, pl);
    std::vector<double> grid;
    for (double deg = -180.0; deg <= 180.0 + 1e-9; deg += grid_deg) {
        grid.push_back(deg * M_PI / 180.0);
    }
    std::cout << "theta_rad,j\n";
    for (const auto& [theta, j] : identifier.sweep_objective(pmu, z_spf, grid)) {
        std::printf("%.12g,%.12g\n", theta, j);
    }
    return kExitOk;
}

int cmd_correct(const CommonArgs& a, const std::string& baseline) {
    const ScenarioConfig cfg = resolve_config(a);
    const FeederModel model = load_feeder_file(cfg.feeder_path);
    const Placement pl = placement_from_config(model, cfg);
    const TrueState truth = solve_power_flow(model);
    const MeasurementSet z = synthesize(model, truth, pl, cfg.noise, cfg.seed);
    const MeasurementSet z_spf = apply_gsa(z, profile_from_config(cfg));

    json out;
    if (baseline == "golden") {
        const GoldenResult g = golden_section_baseline(z_spf, model, pl);
        json per = json::array();
        for (const auto& r : g.per_pmu) {
            per.push_back({{"pmu", r.pmu}, {"theta_rad", r.theta}, {"theta_pi", r.theta / M_PI}, {"j", r.j}});
        }
        out["method"] = "golden";
        out["per_pmu"] = per;
        out["best_pmu"] = g.best_pmu;
        out["theta_hat_rad"] = g.best_theta;
        out["theta_hat_pi"] = g.best_theta / M_PI;
        out["j_corr"] = g.best_j;
        out["objective_evaluations"] = g.objective_evaluations;
    } else {
        const Identifier identifier(model, pl);
        const IdentificationResult ident = identifier.identify_all(z_spf, cfg.delta_theta);
        PsoParams pso = cfg.pso;
        if (!a.seed_set && cfg.pso.seed == 1) pso.seed = cfg.seed + 1;
        const CorrectionResult corr = pso_correct(z_spf, ident, pso, model, pl);
        json theta_rad = json::array(), theta_pi = json::array();
        for (double t : corr.theta_hat.theta) {
            theta_rad.push_back(t);
            theta_pi.push_back(t / M_PI);
        }
        out["method"] = "identify+pso";
        out["p1"] = ident.p1;
        out["p2"] = ident.p2;
        out["p3"] = ident.p3;
        out["theta_hat_rad"] = theta_rad;
        out["theta_hat_pi"] = theta_pi;
        out["j_corr"] = corr.j_corr;
        out["objective_evaluations"] = corr.objective_evaluations;
        out["converged"] = corr.converged;
        out["no_attack"] = corr.no_attack;
    }
    std::cout << out.dump(2) << "\n";
    return kExitOk;
}

int cmd_montecarlo(const CommonArgs& a) {
    const ScenarioConfig cfg = resolve_config(a);
    const FeederModel model = load_feeder_file(cfg.feeder_path);
    const MonteCarloOutput out = run_montecarlo(model, cfg);

    std::filesystem::create_directories(cfg.output_dir);

    std::string trials_csv = "trial,pmu,theta_true_rad,theta_hat_rad,category,true_category,"
                             "j,j_plus,j_minus,low_confidence\n";
    for (const auto& rec : out.records) {
        if (rec.failed) continue;
        for (const auto& v : rec.verdicts) {
            const auto idx = static_cast<std::size_t>(v.pmu - 1);
            char line[256];
            std::snprintf(line, sizeof line, "%d,%d,%.12g,%.12g,%s,%s,%.12g,%.12g,%.12g,%d\n",
                          rec.trial, v.pmu, rec.theta_true[idx], rec.theta_hat[idx],
                          to_string(v.category), to_string(true_category(rec.theta_true[idx])),
                          v.j, v.j_plus, v.j_minus, v.low_confidence ? 1 : 0);
            trials_csv += line;
        }
    }
    write_file(cfg.output_dir + "/trials.csv", trials_csv);

    if (cfg.run_correction) {
        std::string rmse_csv = "bus,phase,delta_v_corrected,delta_theta_corrected,"
                               "delta_v_uncorrected,delta_theta_uncorrected\n";
        const auto& rc = out.aggregate.rmse_corrected.rows;
        const auto& ru = out.aggregate.rmse_uncorrected.rows;
        for (std::size_t i = 0; i < rc.size(); ++i) {
            char line[192];
            std::snprintf(line, sizeof line, "%d,%c,%.12g,%.12g,%.12g,%.12g\n", rc[i].bus,
                          phase_letter(rc[i].phase), rc[i].delta_v, rc[i].delta_theta,
                          ru[i].delta_v, ru[i].delta_theta);
            rmse_csv += line;
        }
        write_file(cfg.output_dir + "/rmse.csv", rmse_csv);
    }

    json j;
    j["trials"] = out.aggregate.trials_used;
    j["trials_requested"] = out.aggregate.trials_requested;
    if (out.aggregate.pmd) j["pmd"] = *out.aggregate.pmd; else j["pmd"] = nullptr;
    if (out.aggregate.pfd) j["pfd"] = *out.aggregate.pfd; else j["pfd"] = nullptr;
    if (out.aggregate.epsilon) j["epsilon_rad"] = *out.aggregate.epsilon; else j["epsilon_rad"] = nullptr;
    if (cfg.run_correction) {
        j["rmse_corrected"] = rmse_json(out.aggregate.rmse_corrected);
        j["rmse_uncorrected"] = rmse_json(out.aggregate.rmse_uncorrected);
        j["objective_evaluations"] = out.aggregate.objective_evaluations;
    }
    j["seed"] = cfg.seed;
    j["delta_theta"] = cfg.delta_theta;
    // wall-clock fields break byte-identical reruns; both ride the same flag
    if (!a.no_timestamp) {
        j["runtime_s"] = out.aggregate.runtime_seconds;
        const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        char buf[64];
        std::strftime(buf, sizeof buf, "%FT%TZ", std::gmtime(&now));
        j["timestamp"] = buf;
    }
    std::cout << j.dump(2) << "\n";
    write_file(cfg.output_dir + "/aggregate.json", j.dump(2) + "\n");
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"GPS-spoofing attack identification and correction on distribution feeders"};
    app.require_subcommand(1);

    CommonArgs args;
    int pmu = 0;
    double grid_deg = 1.0;
    std::string baseline;

    auto* validate = app.add_subcommand("validate", "parse and check a scenario or feeder");
    add_common(validate, args, false);
    auto* powerflow = app.add_subcommand("powerflow", "solve the feeder power flow");
    add_common(powerflow, args, false);
    auto* estimate = app.add_subcommand("estimate", "run the iterative WLS estimator");
    add_common(estimate, args, true);
    auto* attack = app.add_subcommand("attack", "emit the spoofed measurement set");
    add_common(attack, args, true);
    auto* identify = app.add_subcommand("identify", "probe each PMU and classify");
    add_common(identify, args, true);
    auto* sweep = app.add_subcommand("sweep", "objective sweep over one PMU's rotation");
    add_common(sweep, args, true);
    sweep->add_option("--pmu", pmu, "PMU device id (>= 2)")->required();
    sweep->add_option("--grid-deg", grid_deg, "grid step in degrees");
    auto* correct = app.add_subcommand("correct", "estimate spoof angles and correct");
    add_common(correct, args, true);
    correct->add_option("--baseline", baseline, "'golden' for the single-GSA baseline");
    auto* montecarlo = app.add_subcommand("montecarlo", "seeded Monte Carlo evaluation");
    add_common(montecarlo, args, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (validate->parsed()) return cmd_validate(args);
        if (powerflow->parsed()) return cmd_powerflow(args);
        if (estimate->parsed()) return cmd_estimate(args);
        if (attack->parsed()) return cmd_attack(args);
        if (identify->parsed()) return cmd_identify(args);
        if (sweep->parsed()) return cmd_sweep(args, pmu, grid_deg);
        if (correct->parsed()) return cmd_correct(args, baseline);
        if (montecarlo->parsed()) return cmd_montecarlo(args);
    } catch (const FeederError& e) {
        std::cerr << e.what() << "\n";
        return kExitValidation;
    } catch (const ScenarioError& e) {
        std::cerr << e.what() << "\n";
        return kExitValidation;
    } catch (const PlacementError& e) {
        std::cerr << e.what() << "\n";
        return kExitValidation;
    } catch (const IdentifyError& e) {
        std::cerr << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitValidation;
}
