#include "gsa/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

namespace gsa {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<EMat>;
using ECMap = Eigen::Map<const EMat>;

} // namespace

StateLayout StateLayout::build(const FeederModel& model) {
    StateLayout lay;
    int off = 0;
    const auto& slack = model.bus(model.slack_bus);
    for (Phase p : kPhases) {
        if (!slack.phases.has(p)) continue;
        lay.slack_off[static_cast<std::size_t>(p)] = off;
        off += 2;
    }
    lay.branch_off.assign(static_cast<std::size_t>(model.n_branches()), {-1, -1, -1});
    for (const auto& br : model.branches) {
        for (Phase p : kPhases) {
            if (!br.phases.has(p)) continue;
            lay.branch_off[static_cast<std::size_t>(br.id - 1)][static_cast<std::size_t>(p)] = off;
            off += 2;
        }
    }
    lay.n = off;
    return lay;
}

std::string StateLayout::describe_column(const FeederModel& model, int col) const {
    const char* part = (col % 2 == 0) ? "re" : "im";
    for (Phase p : kPhases) {
        const int off = slack_off[static_cast<std::size_t>(p)];
        if (off >= 0 && (col == off || col == off + 1)) {
            return std::string("v_slack.") + phase_letter(p) + "." + part;
        }
    }
    for (const auto& br : model.branches) {
        for (Phase p : kPhases) {
            const int off = branch_off[static_cast<std::size_t>(br.id - 1)][static_cast<std::size_t>(p)];
            if (off >= 0 && (col == off || col == off + 1)) {
                return "i_branch" + std::to_string(br.id) + "." + phase_letter(p) + "." + part;
            }
        }
    }
    return "col" + std::to_string(col);
}

namespace {

void add_voltage_row_terms(const FeederModel& model, const StateLayout& lay, linalg::Mat& H,
                           int row, int bus_id, Phase phase, Component comp) {
    // h_V = v_slack - sum_{p in path} Z_p i_p, expanded to real components.
    const int so = lay.slack_off[static_cast<std::size_t>(phase)];
    if (so < 0) throw EstimatorError("estimator: slack lacks phase of a PMU voltage row");
    const auto r = static_cast<std::size_t>(row);
    H(r, static_cast<std::size_t>(comp == Component::Re ? so : so + 1)) += 1.0;

    for (int bid : path_to_bus(model, bus_id)) {
        const auto& br = model.branch(bid);
        for (Phase g : kPhases) {
            if (!br.phases.has(g)) continue;
            const int io = lay.branch_off[static_cast<std::size_t>(bid - 1)][static_cast<std::size_t>(g)];
            const Complex z = br.z_pu.at(phase, g);
            if (comp == Component::Re) {
                H(r, static_cast<std::size_t>(io)) -= z.real();
                H(r, static_cast<std::size_t>(io + 1)) += z.imag();
            } else {
                H(r, static_cast<std::size_t>(io)) -= z.imag();
                H(r, static_cast<std::size_t>(io + 1)) -= z.real();
            }
        }
    }
}

void fill_row(const FeederModel& model, const StateLayout& lay, linalg::Mat& H, int row,
              const MeasEntry& ent) {
    const auto r = static_cast<std::size_t>(row);
    switch (ent.kind) {
        case MeasKind::PmuVoltage:
            add_voltage_row_terms(model, lay, H, row, ent.bus, ent.phase, ent.comp);
            break;
        case MeasKind::PmuCurrent: {
            const int io = lay.branch_off[static_cast<std::size_t>(ent.branch - 1)]
                                         [static_cast<std::size_t>(ent.phase)];
            if (io < 0) throw EstimatorError("estimator: PMU current row on absent phase");
            H(r, static_cast<std::size_t>(ent.comp == Component::Re ? io : io + 1)) += 1.0;
            break;
        }
        case MeasKind::MeterCurrent: {
            // Injection = current in - sum of currents out, per phase/component.
            const auto bi = static_cast<std::size_t>(model.index_of(ent.bus));
            const int in_id = model.parent_branch[bi];
            if (in_id != 0) {
                const int io = lay.branch_off[static_cast<std::size_t>(in_id - 1)]
                                             [static_cast<std::size_t>(ent.phase)];
                if (io >= 0) {
                    H(r, static_cast<std::size_t>(ent.comp == Component::Re ? io : io + 1)) += 1.0;
                }
            }
            for (int out_id : model.child_branches[bi]) {
                const int io = lay.branch_off[static_cast<std::size_t>(out_id - 1)]
                                             [static_cast<std::size_t>(ent.phase)];
                if (io >= 0) {
                    H(r, static_cast<std::size_t>(ent.comp == Component::Re ? io : io + 1)) -= 1.0;
                }
            }
            break;
        }
    }
}

JacobianBundle finish_bundle(const FeederModel& model, linalg::Mat&& H, linalg::Vec&& W,
                             StateLayout&& lay) {
    JacobianBundle b;
    b.layout = std::move(lay);
    b.H = std::move(H);
    b.W = std::move(W);
    const auto m = b.H.rows();
    const auto n = b.H.cols();

    b.sqrt_w.resize(m);
    for (std::size_t i = 0; i < m; ++i) b.sqrt_w[i] = std::sqrt(b.W[i]);

    ECMap h(b.H.data(), static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    EMat B = h;
    for (std::size_t i = 0; i < m; ++i) B.row(static_cast<Eigen::Index>(i)) *= b.sqrt_w[i];

    // Gain matrix and its observability check.
    EMat G = B.transpose() * B;
    b.G = linalg::Mat(n, n);
    EMap(b.G.data(), G.rows(), G.cols()) = G;
    {
        const Eigen::MatrixXd g_dense(G);
        Eigen::LLT<Eigen::MatrixXd> llt(g_dense);
        if (llt.info() != Eigen::Success) {
            Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr((Eigen::MatrixXd(B)));
            qr.setThreshold(1e-10);
            const auto rank = qr.rank();
            std::ostringstream msg;
            msg << "estimator: placement unobservable, gain matrix rank " << rank << " < "
                << n << "; deficient columns:";
            const auto& perm = qr.colsPermutation().indices();
            for (Eigen::Index k = rank; k < static_cast<Eigen::Index>(n); ++k) {
                msg << ' ' << b.layout.describe_column(model, perm[k]);
            }
            throw EstimatorError(msg.str());
        }
    }

    // Thin QR of the weighted Jacobian backs the solves and the projector:
    // K = I - W^(-1/2) Q Q' W^(1/2). Computing K this way keeps K H = 0 and
    // K^2 = K at working precision even with stiff zero-injection weights.
    Eigen::HouseholderQR<EMat> qr(B);
    EMat thinQ = qr.householderQ() * EMat::Identity(static_cast<Eigen::Index>(m),
                                                    static_cast<Eigen::Index>(n));
    b.Qt = linalg::Mat(n, m);
    EMap(b.Qt.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m)) =
        thinQ.transpose();
    b.R = linalg::Mat(n, n);
    EMap(b.R.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)) =
        qr.matrixQR().topLeftCorner(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n))
            .triangularView<Eigen::Upper>();

    b.K = linalg::Mat(m, m);
    EMat QQt = thinQ * thinQ.transpose();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const double scaled = (b.sqrt_w[j] / b.sqrt_w[i]) * QQt(static_cast<Eigen::Index>(i),
                                                                    static_cast<Eigen::Index>(j));
            b.K(i, j) = (i == j ? 1.0 : 0.0) - scaled;
        }
    }
    return b;
}

} // namespace

JacobianBundle build_jacobian(const FeederModel& model, const Placement& placement,
                              const MeasurementSet& mset) {
    validate_placement(model, placement);
    StateLayout lay = StateLayout::build(model);
    linalg::Mat H(static_cast<std::size_t>(mset.size()), static_cast<std::size_t>(lay.n));
    linalg::Vec W(static_cast<std::size_t>(mset.size()));
    for (int i = 0; i < mset.size(); ++i) {
        fill_row(model, lay, H, i, mset.entries[static_cast<std::size_t>(i)]);
        const double var = mset.variances[static_cast<std::size_t>(i)];
        if (var <= 0.0) throw EstimatorError("estimator: non-positive variance in row " + std::to_string(i));
        W[static_cast<std::size_t>(i)] = 1.0 / var;
    }
    return finish_bundle(model, std::move(H), std::move(W), std::move(lay));
}

JacobianBundle build_jacobian_subset(const FeederModel& model, const Placement& placement,
                                     const MeasurementSet& mset, const std::vector<int>& rows) {
    validate_placement(model, placement);
    StateLayout lay = StateLayout::build(model);
    linalg::Mat H(rows.size(), static_cast<std::size_t>(lay.n));
    linalg::Vec W(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& ent = mset.entries[static_cast<std::size_t>(rows[i])];
        fill_row(model, lay, H, static_cast<int>(i), ent);
        W[i] = 1.0 / mset.variances[static_cast<std::size_t>(rows[i])];
    }
    return finish_bundle(model, std::move(H), std::move(W), std::move(lay));
}

linalg::Vec JacobianBundle::solve(const linalg::Vec& z) const {
    const auto mm = static_cast<std::size_t>(m());
    const auto nn = static_cast<std::size_t>(n());
    linalg::Vec u(mm);
    for (std::size_t i = 0; i < mm; ++i) u[i] = sqrt_w[i] * z[i];
    linalg::Vec t;
    linalg::matvec(Qt, u, t);
    // Back substitution R x = t.
    linalg::Vec x(nn, 0.0);
    for (std::size_t ir = nn; ir-- > 0;) {
        double s = t[ir];
        const double* row = R.row(ir);
        for (std::size_t j = ir + 1; j < nn; ++j) s -= row[j] * x[j];
        x[ir] = s / row[ir];
    }
    return x;
}

linalg::Vec JacobianBundle::predict(const linalg::Vec& x) const {
    linalg::Vec y;
    linalg::matvec(H, x, y);
    return y;
}

std::vector<std::array<Complex, 3>> voltages_from_state(const FeederModel& model,
                                                        const StateLayout& layout,
                                                        const linalg::Vec& x) {
    std::vector<std::array<Complex, 3>> v(static_cast<std::size_t>(model.n_buses()));
    const auto si = static_cast<std::size_t>(model.index_of(model.slack_bus));
    for (Phase p : kPhases) {
        const int off = layout.slack_off[static_cast<std::size_t>(p)];
        v[si][static_cast<std::size_t>(p)] =
            off >= 0 ? Complex{x[static_cast<std::size_t>(off)], x[static_cast<std::size_t>(off) + 1]}
                     : Complex{};
    }
    for (const auto& br : model.branches) {
        std::array<Complex, 3> i_br{};
        for (Phase p : kPhases) {
            const int off = layout.branch_off[static_cast<std::size_t>(br.id - 1)][static_cast<std::size_t>(p)];
            if (off >= 0) {
                i_br[static_cast<std::size_t>(p)] =
                    Complex{x[static_cast<std::size_t>(off)], x[static_cast<std::size_t>(off) + 1]};
            }
        }
        const auto fi = static_cast<std::size_t>(model.index_of(br.from_bus));
        const auto ti = static_cast<std::size_t>(model.index_of(br.to_bus));
        v[ti] = propagate_voltage(br, v[fi], i_br);
    }
    return v;
}

namespace {

/// Initial state: slack voltage from the substation PMU rows, branch currents
/// from a backward accumulation of the slack-linearized meter currents.
linalg::Vec initial_state(const FeederModel& model, const MeasurementSet& mset,
                          const StateLayout& lay) {
    linalg::Vec x(static_cast<std::size_t>(lay.n), 0.0);
    for (int e = 0; e < mset.meter_begin; ++e) {
        const auto& ent = mset.entries[static_cast<std::size_t>(e)];
        if (ent.kind != MeasKind::PmuVoltage || ent.pmu != 1) continue;
        const int off = lay.slack_off[static_cast<std::size_t>(ent.phase)];
        if (off < 0) continue;
        x[static_cast<std::size_t>(ent.comp == Component::Re ? off : off + 1)] =
            mset.values[static_cast<std::size_t>(e)];
    }

    std::vector<std::array<Complex, 3>> inj(static_cast<std::size_t>(model.n_buses()));
    for (std::size_t k = 0; k < mset.meters.size(); ++k) {
        const auto& rec = mset.meters[k];
        const Complex ieq = equivalent_current(
            rec.p, rec.q, model.slack_voltage[static_cast<std::size_t>(rec.phase)]);
        inj[static_cast<std::size_t>(model.index_of(rec.bus))][static_cast<std::size_t>(rec.phase)] = ieq;
    }
    std::vector<std::array<Complex, 3>> acc(static_cast<std::size_t>(model.n_branches()));
    for (int k = model.n_branches(); k >= 1; --k) {
        const auto& br = model.branch(k);
        const auto ti = static_cast<std::size_t>(model.index_of(br.to_bus));
        std::array<Complex, 3> cur = inj[ti];
        for (int cid : model.child_branches[ti]) {
            for (Phase p : kPhases) {
                cur[static_cast<std::size_t>(p)] += acc[static_cast<std::size_t>(cid - 1)][static_cast<std::size_t>(p)];
            }
        }
        acc[static_cast<std::size_t>(k - 1)] = cur;
        for (Phase p : kPhases) {
            const int off = lay.branch_off[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(p)];
            if (off < 0) continue;
            x[static_cast<std::size_t>(off)] = cur[static_cast<std::size_t>(p)].real();
            x[static_cast<std::size_t>(off) + 1] = cur[static_cast<std::size_t>(p)].imag();
        }
    }
    return x;
}

EstimateResult finalize(const FeederModel& model, const JacobianBundle& bundle,
                        const linalg::Vec& z, linalg::Vec&& x) {
    EstimateResult res;
    res.residual = z;
    linalg::Vec hx = bundle.predict(x);
    for (std::size_t i = 0; i < res.residual.size(); ++i) res.residual[i] -= hx[i];
    res.J = linalg::weighted_sumsq(res.residual, bundle.W);
    res.bus_voltage = voltages_from_state(model, bundle.layout, x);
    res.x = std::move(x);
    return res;
}

} // namespace

EstimateResult estimate_iterative(const FeederModel& model, const MeasurementSet& mset,
                                  const JacobianBundle& bundle, double tol, int max_iter) {
    if (tol <= 0.0) throw EstimatorError("estimator: tol must be positive");

    MeasurementSet work = mset;
    linearize_meters_at_slack(work, model);
    linalg::Vec x = initial_state(model, work, bundle.layout);

    int iterations = 0;
    bool converged = false;
    for (int it = 1; it <= max_iter; ++it) {
        iterations = it;
        const auto v = voltages_from_state(model, bundle.layout, x);
        relinearize_meters(work, model, v);
        linalg::Vec x_new = bundle.solve(work.values);
        double step = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) step = std::max(step, std::abs(x_new[i] - x[i]));
        x = std::move(x_new);
        if (step < tol) {
            converged = true;
            break;
        }
    }

    EstimateResult res = finalize(model, bundle, work.values, std::move(x));
    res.iterations = iterations;
    res.converged = converged;
    return res;
}

EstimateResult estimate_linear(const FeederModel& model, const MeasurementSet& mset,
                               const JacobianBundle& bundle) {
    linalg::Vec x = bundle.solve(mset.values);
    EstimateResult res = finalize(model, bundle, mset.values, std::move(x));
    res.iterations = 1;
    res.converged = true;
    linalg::Vec kz;
    linalg::matvec(bundle.K, mset.values, kz);
    res.kz_agreement = linalg::max_abs_diff(res.residual, kz);
    return res;
}

double objective(const linalg::Vec& z, const JacobianBundle& bundle) {
    linalg::Vec kz;
    linalg::matvec(bundle.K, z, kz);
    return linalg::weighted_sumsq(kz, bundle.W);
}

double objective(const MeasurementSet& mset, const JacobianBundle& bundle) {
    return objective(mset.values, bundle);
}

} // namespace gsa
