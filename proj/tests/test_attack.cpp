#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gsa/attack.hpp"
#include "gsa/powerflow.hpp"
#include "test_util.hpp"

using namespace gsa;

namespace {

struct Fixture {
    FeederModel model;
    TrueState truth;
    Placement placement;
    MeasurementSet z;

    Fixture()
        : model(parse_feeder(testutil::five_bus_json())),
          truth(solve_power_flow(model)),
          placement(default_placement(model, {1, 4, 5})),
          z(synthesize(model, truth, placement, {}, 11)) {}
};

} // namespace

TEST_CASE("rotation block basics") {
    auto r0 = rotation_block(0.0);
    CHECK(r0[0] == 1.0);
    CHECK(r0[1] == 0.0);
    CHECK(r0[2] == 0.0);
    CHECK(r0[3] == 1.0);

    auto rpi = rotation_block(M_PI);
    CHECK(rpi[0] == doctest::Approx(-1.0));
    CHECK(rpi[3] == doctest::Approx(-1.0));
    CHECK(std::abs(rpi[1]) < 1e-15);

    // theta = pi/2 sends (1, 0) to (0, 1); determinant is 1
    auto rq = rotation_block(M_PI / 2.0);
    const double x = rq[0] * 1.0 + rq[1] * 0.0;
    const double y = rq[2] * 1.0 + rq[3] * 0.0;
    CHECK(x == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(y == doctest::Approx(1.0));
    CHECK(rq[0] * rq[3] - rq[1] * rq[2] == doctest::Approx(1.0));
}

TEST_CASE("canonical angle wraps to (-pi, pi]") {
    CHECK(canonical_angle(4.9 * M_PI) == doctest::Approx(0.9 * M_PI));
    CHECK(canonical_angle(M_PI) == doctest::Approx(M_PI));
    CHECK(canonical_angle(-M_PI) == doctest::Approx(M_PI));
    CHECK(canonical_angle(0.0) == 0.0);
    CHECK(angle_distance(0.9 * M_PI, -0.9 * M_PI) == doctest::Approx(0.2 * M_PI));
}

TEST_CASE("zero profile is the identity") {
    Fixture f;
    const MeasurementSet out = apply_gsa(f.z, AttackProfile::none(3));
    for (std::size_t i = 0; i < f.z.values.size(); ++i) {
        CHECK(out.values[i] == f.z.values[i]);
    }
}

TEST_CASE("gsa rotates only the target pmu and keeps magnitudes") {
    Fixture f;
    AttackProfile psi({0.0, 0.5 * M_PI, 0.0});
    const MeasurementSet out = apply_gsa(f.z, psi);

    const auto& span = f.z.pmu_spans[1];
    for (int e = 0; e < f.z.size(); e += 2) {
        const bool in_pmu2 = (e >= span.v_begin && e < span.v_end) ||
                             (e >= span.i_begin && e < span.i_end);
        const Complex before{f.z.values[static_cast<std::size_t>(e)],
                             f.z.values[static_cast<std::size_t>(e) + 1]};
        const Complex after{out.values[static_cast<std::size_t>(e)],
                            out.values[static_cast<std::size_t>(e) + 1]};
        if (in_pmu2) {
            CHECK(std::abs(std::abs(after) - std::abs(before)) <= 1e-12); // isometry
            CHECK(std::abs(after - before) > 0.0);
        } else {
            CHECK(after == before);
        }
        // variances untouched everywhere
        CHECK(out.variances[static_cast<std::size_t>(e)] ==
              f.z.variances[static_cast<std::size_t>(e)]);
    }
    // meter records untouched
    for (std::size_t k = 0; k < f.z.meters.size(); ++k) {
        CHECK(out.meters[k].p == f.z.meters[k].p);
        CHECK(out.meters[k].q == f.z.meters[k].q);
    }
}

TEST_CASE("4.9pi acts as 0.9pi") {
    Fixture f;
    const MeasurementSet a = apply_gsa(f.z, AttackProfile({0.0, 4.9 * M_PI, 0.0}));
    const MeasurementSet b = apply_gsa(f.z, AttackProfile({0.0, 0.9 * M_PI, 0.0}));
    CHECK(linalg::max_abs_diff(a.values, b.values) <= 1e-12);
}

TEST_CASE("correct is the exact inverse of apply") {
    Fixture f;
    AttackProfile psi({0.0, 1.234, -2.7});
    const MeasurementSet back = correct_measurements(apply_gsa(f.z, psi), psi);
    CHECK(linalg::max_abs_diff(back.values, f.z.values) <= 1e-12);

    // correcting by theta +/- 2pi is the same correction
    AttackProfile psi2 = psi;
    psi2.theta[1] += 2.0 * M_PI;
    const MeasurementSet b2 = correct_measurements(apply_gsa(f.z, psi), psi2);
    CHECK(linalg::max_abs_diff(b2.values, f.z.values) <= 1e-10);
}

TEST_CASE("group law: successive attacks add angles") {
    Fixture f;
    AttackProfile p1({0.0, 0.4, -0.3});
    AttackProfile p2({0.0, 0.5, 0.8});
    AttackProfile sum({0.0, 0.9, 0.5});
    const MeasurementSet seq = apply_gsa(apply_gsa(f.z, p1), p2);
    const MeasurementSet one = apply_gsa(f.z, sum);
    CHECK(linalg::max_abs_diff(seq.values, one.values) <= 1e-12);
}

TEST_CASE("profile validation") {
    Fixture f;
    CHECK_THROWS_AS(apply_gsa(f.z, AttackProfile({0.0, 1.0})), AttackError);
    // substation entry forced to zero on construction
    AttackProfile p({9.9, 0.0, 0.0});
    CHECK(p.theta[0] == 0.0);
}
