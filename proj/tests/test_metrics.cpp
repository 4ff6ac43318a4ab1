#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "gsa/metrics.hpp"
#include "test_util.hpp"

using namespace gsa;

namespace {

// Hand-buildable record: n PMUs, explicit attack/verdict flags.
TrialRecord make_record(int trial, std::vector<std::uint8_t> attacked,
                        std::vector<std::uint8_t> alpha, std::vector<std::uint8_t> beta) {
    TrialRecord r;
    r.trial = trial;
    r.attacked = std::move(attacked);
    r.alpha = std::move(alpha);
    r.beta = std::move(beta);
    r.theta_true.assign(r.attacked.size(), 0.0);
    r.theta_hat.assign(r.attacked.size(), 0.0);
    for (std::size_t i = 0; i < r.attacked.size(); ++i) {
        if (r.attacked[i]) r.theta_true[i] = 0.5 * M_PI;
    }
    return r;
}

ScenarioConfig identification_config(const std::string& feeder, std::vector<double> psi_pi,
                                     int trials, std::uint64_t seed) {
    ScenarioConfig cfg;
    cfg.feeder_path = feeder;
    cfg.pmu_buses = {800, 816, 820, 836, 854, 858};
    cfg.psi_pi = std::move(psi_pi);
    cfg.trials = trials;
    cfg.seed = seed;
    cfg.run_correction = false;
    cfg.jobs = 2;
    return cfg;
}

} // namespace

TEST_CASE("pmd and pfd reproduce hand-computed fixtures") {
    // fixture 1: 5 PMUs (1 substation + 4), one attacked; all verdicts right
    std::vector<TrialRecord> recs;
    for (int t = 0; t < 100; ++t) {
        recs.push_back(make_record(t, {0, 1, 0, 0, 0}, {0, 0, 0, 0, 0}, {0, 0, 0, 0, 0}));
    }
    auto [pmd, pfd] = pmd_pfd(recs);
    REQUIRE(pmd.has_value());
    REQUIRE(pfd.has_value());
    CHECK(*pmd == 0.0);
    CHECK(*pfd == 0.0);

    // fixture 2: one false flag on one of 3 clean PMUs in 1 of 100 trials
    recs.clear();
    for (int t = 0; t < 100; ++t) {
        auto beta = std::vector<std::uint8_t>{0, 0, 0, 0, 0};
        if (t == 17) beta[2] = 1;
        recs.push_back(make_record(t, {0, 1, 0, 0, 0}, {0, 0, 0, 0, 0}, beta));
    }
    std::tie(pmd, pfd) = pmd_pfd(recs);
    CHECK(*pfd == 1.0 / 300.0); // 1 / (100 trials * 3 clean PMUs)
    CHECK(*pmd == 0.0);

    // fixture 3: every attacked PMU missed in every trial
    recs.clear();
    for (int t = 0; t < 10; ++t) {
        recs.push_back(make_record(t, {0, 1, 1, 0, 0}, {0, 1, 1, 0, 0}, {0, 0, 0, 0, 0}));
    }
    std::tie(pmd, pfd) = pmd_pfd(recs);
    CHECK(*pmd == 1.0);
    CHECK(*pfd == 0.0);
}

TEST_CASE("undefined denominators are reported as null, not zero") {
    std::vector<TrialRecord> clean;
    for (int t = 0; t < 5; ++t) {
        clean.push_back(make_record(t, {0, 0, 0, 0, 0}, {0, 0, 0, 0, 0}, {0, 0, 0, 0, 0}));
    }
    auto [pmd, pfd] = pmd_pfd(clean);
    CHECK_FALSE(pmd.has_value()); // no attacked PMU
    CHECK(pfd.has_value());
    CHECK_FALSE(estimation_error(clean).has_value());

    std::vector<TrialRecord> all_attacked;
    for (int t = 0; t < 5; ++t) {
        all_attacked.push_back(make_record(t, {0, 1, 1, 1, 1}, {0, 0, 0, 0, 0}, {0, 0, 0, 0, 0}));
    }
    std::tie(pmd, pfd) = pmd_pfd(all_attacked);
    CHECK(pmd.has_value());
    CHECK_FALSE(pfd.has_value()); // no clean PMU
}

TEST_CASE("estimation error: exact recovery, pi pinning, wrap distance") {
    TrialRecord r = make_record(0, {0, 1, 0, 0, 0}, {0, 0, 0, 0, 0}, {0, 0, 0, 0, 0});
    r.theta_hat[1] = r.theta_true[1];
    CHECK(*estimation_error({r}) == 0.0);

    // true pi, estimated pi
    r.theta_true[1] = M_PI;
    r.theta_hat[1] = M_PI;
    CHECK(*estimation_error({r}) == 0.0);

    // wrap-aware: 0.9pi vs -0.9pi is 0.2pi apart, not 1.8pi
    r.theta_true[1] = 0.9 * M_PI;
    r.theta_hat[1] = -0.9 * M_PI;
    CHECK(*estimation_error({r}) == doctest::Approx(0.2 * M_PI).epsilon(1e-12));
}

TEST_CASE("metrics are invariant under trial reordering") {
    std::mt19937_64 rng(4);
    std::vector<TrialRecord> recs;
    std::uniform_real_distribution<double> angle(-M_PI, M_PI);
    std::bernoulli_distribution coin(0.3);
    for (int t = 0; t < 40; ++t) {
        TrialRecord r = make_record(t, {0, 1, 0, 1, 0}, {0, 0, 0, 0, 0}, {0, 0, 0, 0, 0});
        r.alpha[1] = coin(rng);
        r.beta[2] = coin(rng);
        r.theta_hat[1] = angle(rng);
        r.theta_hat[3] = angle(rng);
        recs.push_back(r);
    }
    auto [pmd1, pfd1] = pmd_pfd(recs);
    const auto eps1 = estimation_error(recs);
    std::shuffle(recs.begin(), recs.end(), rng);
    auto [pmd2, pfd2] = pmd_pfd(recs);
    CHECK(*pmd1 == *pmd2);
    CHECK(*pfd1 == *pfd2);
    // the angle sum reassociates under reordering; equal up to rounding
    CHECK(*eps1 == doctest::Approx(*estimation_error(recs)).epsilon(1e-14));
}

TEST_CASE("rmse: perfect estimates give zeros") {
    const FeederModel model = load_feeder_file(testutil::data_path("ieee34_approx.json"));
    const TrueState truth = solve_power_flow(model);
    const auto keys = voltage_keys(model);
    std::vector<double> vm, va;
    for (const auto& [bus, phase] : keys) {
        const Complex v = truth.voltage(model, bus, phase);
        vm.push_back(std::abs(v));
        va.push_back(std::arg(v));
    }
    TrialRecord r;
    r.trial = 0;
    r.corrected = true;
    r.v_mag_corr = vm;
    r.v_ang_corr = va;
    r.v_mag_unc = vm;
    r.v_ang_unc = va;
    const RmseTable t = rmse({r}, keys, vm, va, true);
    for (const auto& row : t.rows) {
        CHECK(row.delta_v == 0.0);
        CHECK(row.delta_theta == 0.0);
    }
}

TEST_CASE("identification-only monte carlo: deterministic, pmd 0") {
    const std::string feeder = testutil::data_path("ieee34_approx.json");
    const FeederModel model = load_feeder_file(feeder);
    auto cfg = identification_config(feeder, {0, 0, 0.5, 0, 0, 0}, 25, 77);
    const MonteCarloOutput a = run_montecarlo(model, cfg);
    REQUIRE(a.aggregate.trials_used == 25);
    REQUIRE(a.aggregate.pmd.has_value());
    CHECK(*a.aggregate.pmd == 0.0);
    CHECK(*a.aggregate.pfd == 0.0);
    CHECK_FALSE(a.aggregate.epsilon.has_value()); // no correction stage

    const MonteCarloOutput b = run_montecarlo(model, cfg);
    CHECK(*b.aggregate.pmd == *a.aggregate.pmd);
    CHECK(*b.aggregate.pfd == *a.aggregate.pfd);
    for (std::size_t t = 0; t < a.records.size(); ++t) {
        for (std::size_t v = 0; v < a.records[t].verdicts.size(); ++v) {
            CHECK(a.records[t].verdicts[v].j == b.records[t].verdicts[v].j);
            CHECK(a.records[t].verdicts[v].category == b.records[t].verdicts[v].category);
        }
    }
}

TEST_CASE("scenario config validation") {
    const std::string ok = R"({
      "feeder": "f.json", "pmus": [800, 816], "psi": [0, 0.5],
      "delta_theta": 0.2, "trials": 10, "seed": 3
    })";
    const ScenarioConfig cfg = parse_scenario(ok, "/base");
    CHECK(cfg.feeder_path == "/base/f.json");
    CHECK(cfg.psi_pi == std::vector<double>{0.0, 0.5});

    auto expect_fail = [](std::string text, const char* what) {
        CHECK_THROWS_WITH_AS(parse_scenario(text, ""), doctest::Contains(what), ScenarioError);
    };
    expect_fail(R"({"feeder": "f", "pmus": [800, 816], "psi": [0]})", "one entry per PMU");
    expect_fail(R"({"feeder": "f", "pmus": [800, 816], "psi": [0.1, 0]})", "psi[0]");
    expect_fail(R"({"feeder": "f", "pmus": [800], "psi": [0], "delta_theta": 0.02})",
                "exceed 0.02");
    expect_fail(R"({"feeder": "f", "pmus": [800], "psi": [0], "trials": 0})", "trials");
    expect_fail(R"({"feeder": "f", "pmus": []})", "substation");
}

TEST_CASE("corrected states beat uncorrected states on an attacked scenario") {
    const std::string feeder = testutil::data_path("ieee34_approx.json");
    const FeederModel model = load_feeder_file(feeder);
    ScenarioConfig cfg = identification_config(feeder, {0, 0, -0.5, 0.2, -0.1, 0.9}, 4, 5);
    cfg.run_correction = true;
    cfg.pso.swarm_size = 25;
    cfg.pso.max_iters = 80;
    cfg.pso.stall_iters = 15;
    const MonteCarloOutput out = run_montecarlo(model, cfg);
    REQUIRE(out.aggregate.epsilon.has_value());
    CHECK(*out.aggregate.epsilon <= 0.08);
    CHECK(*out.aggregate.pmd == 0.0);

    // corrected angle RMSE no worse than uncorrected at every single bus
    const auto& rc = out.aggregate.rmse_corrected.rows;
    const auto& ru = out.aggregate.rmse_uncorrected.rows;
    double unc_worst = 0.0;
    for (std::size_t i = 0; i < rc.size(); ++i) {
        CHECK(rc[i].delta_theta <= ru[i].delta_theta);
        unc_worst = std::max(unc_worst, ru[i].delta_theta);
    }
    CHECK(unc_worst > 0.1); // the spoof leaves a visible angle error when uncorrected
}

TEST_CASE("epsilon shrinks when the noise maxima are halved") {
    const std::string feeder = testutil::data_path("ieee34_approx.json");
    const FeederModel model = load_feeder_file(feeder);
    ScenarioConfig cfg = identification_config(feeder, {0, 0.4, 0, 0, 0, 0}, 6, 21);
    cfg.run_correction = true;
    cfg.pso.swarm_size = 25;
    cfg.pso.max_iters = 80;
    cfg.pso.stall_iters = 15;

    const double eps_full = *run_montecarlo(model, cfg).aggregate.epsilon;
    cfg.noise.pmu_mag_max /= 2.0;
    cfg.noise.pmu_angle_max /= 2.0;
    cfg.noise.meter_power_max /= 2.0;
    const double eps_half = *run_montecarlo(model, cfg).aggregate.epsilon;
    CHECK(eps_half <= eps_full);
}
