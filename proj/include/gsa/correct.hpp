#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "gsa/attack.hpp"
#include "gsa/estimator.hpp"
#include "gsa/identify.hpp"

namespace gsa {

struct PsoParams {
    int swarm_size = 50;
    double inertia = 0.729;
    double cognitive = 1.49445;
    double social = 1.49445;
    int max_iters = 200;
    int stall_iters = 30;   // stop after this many iterations without
    double stall_tol = 1e-6; // an improvement larger than stall_tol
    double velocity_clamp = 0.2; // fraction of the search range
    double interval_margin = 1e-3; // closes the open (0,pi)/(-pi,0) boxes
    std::uint64_t seed = 1;
};

struct CorrectionResult {
    AttackProfile theta_hat;
    double j_corr = 0.0;
    linalg::Vec x_corr;
    long objective_evaluations = 0;
    bool converged = false;
    bool no_attack = false;
};

/// Shared state for scoring spoof-angle candidates: z_corr = A^-1 z_spf,
/// then the full iterative WLS, then J_corr = r' W r. The bundle
/// factorization is computed once and reused across all evaluations.
class CorrectionEvaluator {
public:
    CorrectionEvaluator(const FeederModel& model, const JacobianBundle& bundle,
                        const MeasurementSet& z_spf, double inner_tol = 1e-6,
                        int inner_max_iter = 20);

    /// Returns (J_corr, x_corr); J is +inf when the inner estimator fails.
    std::pair<double, linalg::Vec> evaluate(const AttackProfile& candidate) const;

    long evaluations() const { return evals_; }

private:
    const FeederModel& model_;
    const JacobianBundle& bundle_;
    const MeasurementSet& z_spf_;
    double inner_tol_;
    int inner_max_iter_;
    mutable long evals_ = 0;
};

/// PSO over the spoof angles left free by the identification result: P1
/// members pinned to pi, unidentified PMUs pinned to 0, P2/P3 members
/// searched inside their open interval. Deterministic given the seed.
CorrectionResult pso_correct(const MeasurementSet& z_spf, const IdentificationResult& ident,
                             const PsoParams& params, const FeederModel& model,
                             const Placement& placement);

struct GoldenPmuResult {
    int pmu = 0;
    double theta = 0.0;
    double j = 0.0;
};

struct GoldenResult {
    std::vector<GoldenPmuResult> per_pmu; // PMUs 2..N
    int best_pmu = 0;
    double best_theta = 0.0;
    double best_j = 0.0;
    long objective_evaluations = 0;
};

/// Single-GSA baseline: per PMU, a bracketed golden-section search of J_corr
/// over theta in (-pi, pi] with all other angles zero; returns the global
/// minimum across PMUs and the total evaluation count.
GoldenResult golden_section_baseline(const MeasurementSet& z_spf, const FeederModel& model,
                                     const Placement& placement, double tol = 1e-3);

} // namespace gsa
