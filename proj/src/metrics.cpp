#include "gsa/metrics.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

#include "gsa/correct.hpp"

namespace gsa {

std::vector<std::pair<int, Phase>> voltage_keys(const FeederModel& model) {
    std::vector<std::pair<int, Phase>> keys;
    for (const auto& b : model.buses) {
        for (Phase p : kPhases) {
            if (b.phases.has(p)) keys.emplace_back(b.id, p);
        }
    }
    return keys;
}

std::pair<std::optional<double>, std::optional<double>> pmd_pfd(
    const std::vector<TrialRecord>& records) {
    long miss = 0, fals = 0, attacked_total = 0, clean_total = 0;
    for (const auto& rec : records) {
        if (rec.failed) continue;
        const int n = static_cast<int>(rec.attacked.size());
        for (int i = 1; i < n; ++i) { // PMUs 2..N
            const auto idx = static_cast<std::size_t>(i);
            if (rec.attacked[idx]) {
                ++attacked_total;
                miss += rec.alpha[idx];
            } else {
                ++clean_total;
                fals += rec.beta[idx];
            }
        }
    }
    std::optional<double> pmd, pfd;
    if (attacked_total > 0) pmd = static_cast<double>(miss) / static_cast<double>(attacked_total);
    if (clean_total > 0) pfd = static_cast<double>(fals) / static_cast<double>(clean_total);
    return {pmd, pfd};
}

std::optional<double> estimation_error(const std::vector<TrialRecord>& records) {
    double sum = 0.0;
    long count = 0;
    for (const auto& rec : records) {
        if (rec.failed) continue;
        const int n = static_cast<int>(rec.attacked.size());
        for (int i = 1; i < n; ++i) {
            const auto idx = static_cast<std::size_t>(i);
            if (!rec.attacked[idx]) continue;
            sum += angle_distance(rec.theta_true[idx], rec.theta_hat[idx]);
            ++count;
        }
    }
    if (count == 0) return std::nullopt;
    return sum / static_cast<double>(count);
}

RmseTable rmse(const std::vector<TrialRecord>& records,
               const std::vector<std::pair<int, Phase>>& keys,
               const std::vector<double>& v_mag_true, const std::vector<double>& v_ang_true,
               bool corrected) {
    RmseTable table;
    std::array<int, 3> phase_count{};
    for (std::size_t k = 0; k < keys.size(); ++k) {
        double acc_v = 0.0, acc_th = 0.0;
        int used = 0;
        for (const auto& rec : records) {
            if (rec.failed) continue;
            const auto& mags = corrected ? rec.v_mag_corr : rec.v_mag_unc;
            const auto& angs = corrected ? rec.v_ang_corr : rec.v_ang_unc;
            if (mags.size() != keys.size()) continue;
            const double rel = (v_mag_true[k] - mags[k]) / v_mag_true[k];
            const double dth = canonical_angle(v_ang_true[k] - angs[k]);
            acc_v += rel * rel;
            acc_th += dth * dth;
            ++used;
        }
        RmseRow row;
        row.bus = keys[k].first;
        row.phase = keys[k].second;
        if (used > 0) {
            row.delta_v = std::sqrt(acc_v / used);
            row.delta_theta = std::sqrt(acc_th / used);
        }
        table.rows.push_back(row);
        const auto ip = static_cast<std::size_t>(row.phase);
        table.max_delta_v[ip] = std::max(table.max_delta_v[ip], row.delta_v);
        table.max_delta_theta[ip] = std::max(table.max_delta_theta[ip], row.delta_theta);
        table.avg_delta_v[ip] += row.delta_v;
        table.avg_delta_theta[ip] += row.delta_theta;
        ++phase_count[ip];
    }
    for (int p = 0; p < 3; ++p) {
        const auto ip = static_cast<std::size_t>(p);
        if (phase_count[ip] > 0) {
            table.avg_delta_v[ip] /= phase_count[ip];
            table.avg_delta_theta[ip] /= phase_count[ip];
        }
    }
    return table;
}

namespace {

TrialRecord run_trial(const FeederModel& model, const ScenarioConfig& cfg,
                      const Placement& placement, const TrueState& truth,
                      const Identifier& identifier, const AttackProfile& psi, int trial,
                      const std::vector<std::pair<int, Phase>>& keys, long& evals) {
    TrialRecord rec;
    rec.trial = trial;
    const std::uint64_t trial_seed = cfg.seed + static_cast<std::uint64_t>(trial);

    const int n_pmus = placement.n_pmus();
    rec.theta_true.resize(static_cast<std::size_t>(n_pmus));
    rec.theta_hat.assign(static_cast<std::size_t>(n_pmus), 0.0);
    rec.attacked.assign(static_cast<std::size_t>(n_pmus), 0);
    rec.alpha.assign(static_cast<std::size_t>(n_pmus), 0);
    rec.beta.assign(static_cast<std::size_t>(n_pmus), 0);
    for (int i = 0; i < n_pmus; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        rec.theta_true[idx] = psi.theta[idx];
        rec.attacked[idx] = canonical_angle(psi.theta[idx]) != 0.0 ? 1 : 0;
    }

    try {
        const MeasurementSet z = synthesize(model, truth, placement, cfg.noise, trial_seed);
        const MeasurementSet z_spf = apply_gsa(z, psi);

        const IdentificationResult ident = identifier.identify_all(z_spf, cfg.delta_theta);
        rec.verdicts = ident.verdicts;
        for (const auto& v : ident.verdicts) {
            const auto idx = static_cast<std::size_t>(v.pmu - 1);
            if (rec.attacked[idx] && !v.attacked) rec.alpha[idx] = 1;
            if (!rec.attacked[idx] && v.attacked) rec.beta[idx] = 1;
        }

        if (cfg.run_correction) {
            PsoParams pso = cfg.pso;
            pso.seed = trial_seed * 0x9e3779b97f4a7c15ULL + 1; // per-trial swarm stream
            const CorrectionResult corr = pso_correct(z_spf, ident, pso, model, placement);
            evals += corr.objective_evaluations;
            rec.theta_hat = corr.theta_hat.theta;
            rec.corrected = true;

            const JacobianBundle bundle = build_jacobian(model, placement, z_spf);
            const MeasurementSet z_corr = correct_measurements(z_spf, corr.theta_hat);
            const EstimateResult est_corr = estimate_iterative(model, z_corr, bundle);
            const EstimateResult est_unc = estimate_iterative(model, z_spf, bundle);

            rec.v_mag_corr.reserve(keys.size());
            for (const auto& [bus, phase] : keys) {
                const auto bi = static_cast<std::size_t>(model.index_of(bus));
                const auto ip = static_cast<std::size_t>(phase);
                rec.v_mag_corr.push_back(std::abs(est_corr.bus_voltage[bi][ip]));
                rec.v_ang_corr.push_back(std::arg(est_corr.bus_voltage[bi][ip]));
                rec.v_mag_unc.push_back(std::abs(est_unc.bus_voltage[bi][ip]));
                rec.v_ang_unc.push_back(std::arg(est_unc.bus_voltage[bi][ip]));
            }
        }
    } catch (const std::exception& e) {
        rec.failed = true;
        rec.error = e.what();
    }
    return rec;
}

} // namespace

MonteCarloOutput run_montecarlo(const FeederModel& model, const ScenarioConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();

    MonteCarloOutput out;
    const Placement placement = placement_from_config(model, cfg);
    const AttackProfile psi = profile_from_config(cfg);
    const TrueState truth = solve_power_flow(model);
    const Identifier identifier(model, placement);

    out.keys = voltage_keys(model);
    for (const auto& [bus, phase] : out.keys) {
        const Complex v = truth.voltage(model, bus, phase);
        out.v_mag_true.push_back(std::abs(v));
        out.v_ang_true.push_back(std::arg(v));
    }

    out.records.resize(static_cast<std::size_t>(cfg.trials));
    std::vector<long> eval_counts(static_cast<std::size_t>(cfg.trials), 0);

    const int hw = static_cast<int>(std::thread::hardware_concurrency());
    const int jobs = std::max(1, std::min(cfg.jobs > 0 ? cfg.jobs : std::max(hw, 1), cfg.trials));
    std::atomic<int> next{0};
    auto worker = [&]() {
        while (true) {
            const int j = next.fetch_add(1);
            if (j >= cfg.trials) break;
            out.records[static_cast<std::size_t>(j)] =
                run_trial(model, cfg, placement, truth, identifier, psi, j, out.keys,
                          eval_counts[static_cast<std::size_t>(j)]);
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(jobs));
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    auto& agg = out.aggregate;
    agg.trials_requested = cfg.trials;
    for (const auto& rec : out.records) agg.trials_used += rec.failed ? 0 : 1;
    auto [pmd, pfd] = pmd_pfd(out.records);
    agg.pmd = pmd;
    agg.pfd = pfd;
    if (cfg.run_correction) {
        agg.epsilon = estimation_error(out.records);
        agg.rmse_corrected = rmse(out.records, out.keys, out.v_mag_true, out.v_ang_true, true);
        agg.rmse_uncorrected = rmse(out.records, out.keys, out.v_mag_true, out.v_ang_true, false);
    }
    for (long c : eval_counts) agg.objective_evaluations += c;
    agg.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

} // namespace gsa
