#include "gsa/correct.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace gsa {

CorrectionEvaluator::CorrectionEvaluator(const FeederModel& model, const JacobianBundle& bundle,
                                         const MeasurementSet& z_spf, double inner_tol,
                                         int inner_max_iter)
    : model_(model), bundle_(bundle), z_spf_(z_spf), inner_tol_(inner_tol),
      inner_max_iter_(inner_max_iter) {}

std::pair<double, linalg::Vec> CorrectionEvaluator::evaluate(const AttackProfile& candidate) const {
    ++evals_;
    const MeasurementSet z_corr = correct_measurements(z_spf_, candidate);
    EstimateResult est = estimate_iterative(model_, z_corr, bundle_, inner_tol_, inner_max_iter_);
    if (!est.converged) {
        return {std::numeric_limits<double>::infinity(), std::move(est.x)};
    }
    return {est.J, std::move(est.x)};
}

namespace {

struct FreeDim {
    int pmu_index = 0; // 0-based
    double lo = 0.0;
    double hi = 0.0;
};

AttackProfile make_profile(const std::vector<FreeDim>& dims, const std::vector<double>& pos,
                           const AttackProfile& pinned) {
    AttackProfile prof = pinned;
    for (std::size_t d = 0; d < dims.size(); ++d) {
        prof.theta[static_cast<std::size_t>(dims[d].pmu_index)] = pos[d];
    }
    return prof;
}

} // namespace

CorrectionResult pso_correct(const MeasurementSet& z_spf, const IdentificationResult& ident,
                             const PsoParams& params, const FeederModel& model,
                             const Placement& placement) {
    const JacobianBundle bundle = build_jacobian(model, placement, z_spf);
    CorrectionEvaluator eval(model, bundle, z_spf);

    AttackProfile pinned = AttackProfile::none(placement.n_pmus());
    for (int pmu : ident.p1) pinned.theta[static_cast<std::size_t>(pmu - 1)] = M_PI;

    const double dm = params.interval_margin;
    std::vector<FreeDim> dims;
    for (int pmu : ident.p2) dims.push_back({pmu - 1, dm, M_PI - dm});
    for (int pmu : ident.p3) dims.push_back({pmu - 1, -M_PI + dm, -dm});
    std::sort(dims.begin(), dims.end(),
              [](const FreeDim& a, const FreeDim& b) { return a.pmu_index < b.pmu_index; });

    CorrectionResult res;
    res.no_attack = ident.p1.empty() && ident.p2.empty() && ident.p3.empty();
    if (dims.empty()) {
        auto [j, x] = eval.evaluate(pinned);
        res.theta_hat = pinned;
        res.j_corr = j;
        res.x_corr = std::move(x);
        res.objective_evaluations = eval.evaluations();
        res.converged = true;
        return res;
    }

    const auto d = dims.size();
    const auto swarm = static_cast<std::size_t>(std::max(params.swarm_size, 2));
    std::mt19937_64 rng(params.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<std::vector<double>> pos(swarm, std::vector<double>(d));
    std::vector<std::vector<double>> vel(swarm, std::vector<double>(d, 0.0));
    std::vector<std::vector<double>> pbest_pos(swarm);
    std::vector<double> pbest_j(swarm, std::numeric_limits<double>::infinity());
    std::vector<double> gbest_pos(d, 0.0);
    double gbest_j = std::numeric_limits<double>::infinity();
    linalg::Vec gbest_x;

    auto score = [&](std::size_t k) {
        auto [j, x] = eval.evaluate(make_profile(dims, pos[k], pinned));
        if (j < pbest_j[k]) {
            pbest_j[k] = j;
            pbest_pos[k] = pos[k];
        }
        if (j < gbest_j) {
            gbest_j = j;
            gbest_pos = pos[k];
            gbest_x = std::move(x);
        }
    };

    for (std::size_t k = 0; k < swarm; ++k) {
        for (std::size_t dd = 0; dd < d; ++dd) {
            pos[k][dd] = dims[dd].lo + unit(rng) * (dims[dd].hi - dims[dd].lo);
        }
        pbest_pos[k] = pos[k];
        score(k);
    }

    int since_improve = 0;
    bool stalled = false;
    for (int it = 1; it <= params.max_iters; ++it) {
        const double prev_best = gbest_j;
        for (std::size_t k = 0; k < swarm; ++k) {
            for (std::size_t dd = 0; dd < d; ++dd) {
                const double range = dims[dd].hi - dims[dd].lo;
                const double vmax = params.velocity_clamp * range;
                double v = params.inertia * vel[k][dd] +
                           params.cognitive * unit(rng) * (pbest_pos[k][dd] - pos[k][dd]) +
                           params.social * unit(rng) * (gbest_pos[dd] - pos[k][dd]);
                v = std::clamp(v, -vmax, vmax);
                double x = pos[k][dd] + v;
                if (x < dims[dd].lo) {
                    x = dims[dd].lo;
                    v = -v;
                } else if (x > dims[dd].hi) {
                    x = dims[dd].hi;
                    v = -v;
                }
                vel[k][dd] = v;
                pos[k][dd] = x;
            }
            score(k);
        }
        if (prev_best - gbest_j > params.stall_tol) {
            since_improve = 0;
        } else {
            ++since_improve;
        }
        if (since_improve >= params.stall_iters) {
            stalled = true;
            break;
        }
    }

    // Plain gbest PSO stagnates once the swarm collapses onto its best point
    // (the attraction terms vanish identically). A short golden-section pass
    // per free dimension finishes the local convergence; the result stays
    // deterministic and every probe is counted.
    {
        const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
        const int passes = d > 1 ? 2 : 1;
        for (int pass = 0; pass < passes; ++pass) {
            for (std::size_t dd = 0; dd < d; ++dd) {
                double a = std::max(dims[dd].lo, gbest_pos[dd] - 0.05);
                double b = std::min(dims[dd].hi, gbest_pos[dd] + 0.05);
                auto f = [&](double t) {
                    std::vector<double> cand = gbest_pos;
                    cand[dd] = t;
                    auto [j, x] = eval.evaluate(make_profile(dims, cand, pinned));
                    if (j < gbest_j) {
                        gbest_j = j;
                        gbest_pos = cand;
                        gbest_x = std::move(x);
                    }
                    return j;
                };
                double c = b - gr * (b - a);
                double dpt = a + gr * (b - a);
                double fc = f(c);
                double fd = f(dpt);
                while (b - a > 1e-9) {
                    if (fc < fd) {
                        b = dpt;
                        dpt = c;
                        fd = fc;
                        c = b - gr * (b - a);
                        fc = f(c);
                    } else {
                        a = c;
                        c = dpt;
                        fc = fd;
                        dpt = a + gr * (b - a);
                        fd = f(dpt);
                    }
                }
            }
        }
    }

    res.theta_hat = make_profile(dims, gbest_pos, pinned);
    for (auto& t : res.theta_hat.theta) t = canonical_angle(t);
    res.theta_hat.theta[0] = 0.0;
    res.j_corr = gbest_j;
    res.x_corr = std::move(gbest_x);
    res.objective_evaluations = eval.evaluations();
    res.converged = stalled; // max_iters exhausted while still improving -> false
    return res;
}

GoldenResult golden_section_baseline(const MeasurementSet& z_spf, const FeederModel& model,
                                     const Placement& placement, double tol) {
    const JacobianBundle bundle = build_jacobian(model, placement, z_spf);
    CorrectionEvaluator eval(model, bundle, z_spf);

    GoldenResult res;
    res.best_j = std::numeric_limits<double>::infinity();

    const int n_pmus = placement.n_pmus();
    for (int pmu = 2; pmu <= n_pmus; ++pmu) {
        auto f = [&](double theta) {
            AttackProfile prof = AttackProfile::none(n_pmus);
            prof.theta[static_cast<std::size_t>(pmu - 1)] = theta;
            return eval.evaluate(prof).first;
        };

        // Coarse scan to bracket the basin; J is periodic in theta, so the
        // bracket may straddle the +/-pi seam.
        constexpr int kScan = 16;
        const double step = 2.0 * M_PI / kScan;
        double best_scan = std::numeric_limits<double>::infinity();
        double center = 0.0;
        for (int k = 0; k < kScan; ++k) {
            const double theta = -M_PI + (k + 0.5) * step;
            const double j = f(theta);
            if (j < best_scan) {
                best_scan = j;
                center = theta;
            }
        }
        double a = center - step;
        double b = center + step;

        const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
        double c = b - gr * (b - a);
        double dpt = a + gr * (b - a);
        double fc = f(c);
        double fd = f(dpt);
        while (b - a > tol) {
            if (fc < fd) {
                b = dpt;
                dpt = c;
                fd = fc;
                c = b - gr * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = dpt;
                fc = fd;
                dpt = a + gr * (b - a);
                fd = f(dpt);
            }
        }
        const double theta_hat = canonical_angle(0.5 * (a + b));
        GoldenPmuResult pr{pmu, theta_hat, f(theta_hat)};
        res.per_pmu.push_back(pr);
        if (pr.j < res.best_j) {
            res.best_j = pr.j;
            res.best_pmu = pr.pmu;
            res.best_theta = pr.theta;
        }
    }
    res.objective_evaluations = eval.evaluations();
    return res;
}

} // namespace gsa
