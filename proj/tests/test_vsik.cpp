#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ccik/vsik.hpp"
#include "ccik/workspace.hpp"
#include "oracles.hpp"

using namespace ccik;
using namespace ccik::testing;

namespace {

bool roundtrip_ok(const IKOutcome& o, const SolverSettings& st = {}) {
    return o.solved() && o.pos_err < st.pos_tol && o.ori_err < st.ori_tol;
}

}  // namespace

TEST_CASE("ci2 residual crosses zero at the generating bending angle") {
    StructuralParams P;
    std::mt19937_64 rng(21);
    for (int i = 0; i < 200; ++i) {
        ConfigCI2 c = random_ci2(rng, P);
        c.theta1 = uni(rng, 0.05, P.theta1_max);  // keep the root interior
        const Pose t = forward_kinematics(P, c);
        // one of the two root selections must vanish at theta1*
        const ResidualCI2 r0 = residual_ci2(c.theta1, t, P, RootBranch::first_root);
        const ResidualCI2 r1 = residual_ci2(c.theta1, t, P, RootBranch::second_root);
        const double best = std::min(r0.valid ? std::abs(r0.value) : 1e18,
                                     r1.valid ? std::abs(r1.value) : 1e18);
        CHECK(best < 1e-6);
    }
}

TEST_CASE("ci2 residual reports complex roots for unreachable distance") {
    StructuralParams P;
    // far beyond total length, direction misaligned with the position ray
    const Pose t =
        pose_with_direction(Vec3(-328.0, 86.0, -19.0), Vec3(-0.18, -0.98, -0.09).normalized());
    bool complex_seen = false;
    double min_valid_residual = std::numeric_limits<double>::infinity();
    for (double th = 0.1; th < 3.1; th += 0.1) {
        const ResidualCI2 r = residual_ci2(th, t, P);
        if (r.complex_roots) complex_seen = true;
        if (r.valid) min_valid_residual = std::min(min_valid_residual, std::abs(r.value));
    }
    CHECK(complex_seen);
    CHECK(min_valid_residual > 1.0);  // nowhere near a root
    CHECK(solve_ci2(t, P).status == SolveStatus::NonRealSolution);
}

TEST_CASE("ci2 straight axial target solves to all-zero angles") {
    StructuralParams P;
    Pose t;
    t.p = Vec3(0, 0, 200.0);
    const IKOutcome o = solve_ci2(t, P);
    REQUIRE(o.solved());
    const auto& c = std::get<ConfigCI2>(*o.config);
    CHECK(c.theta1 == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(c.theta2 == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(c.Ls == doctest::Approx(200.0 - 140.0).epsilon(1e-9));
}

TEST_CASE("ci2 roundtrip corpus") {
    StructuralParams P;
    SolverSettings st;
    std::mt19937_64 rng(22);
    long iters = 0;
    int first = 0, second = 0;
    const int n = 2000;
    for (int i = 0; i < n; ++i) {
        const ConfigCI2 c = random_ci2(rng, P);
        const Pose t = forward_kinematics(P, c);
        const IKOutcome o = solve_ci2(t, P, st);
        REQUIRE_MESSAGE(roundtrip_ok(o, st), "case ", i, " status ", to_string(o.status));
        CHECK(std::get<ConfigCI2>(*o.config).within_limits(P));
        iters += o.iterations;
        (o.branch_used == RootBranch::first_root ? first : second)++;
    }
    CHECK(double(iters) / n <= 20.0);
    CHECK(first > 0);
    CHECK(second > 0);  // both quadratic roots exercised over the corpus
}

TEST_CASE("ci1 roundtrip corpus") {
    StructuralParams P;
    SolverSettings st;
    std::mt19937_64 rng(23);
    long iters = 0;
    const int n = 2000;
    for (int i = 0; i < n; ++i) {
        const ConfigCI1 c = random_ci1(rng, P);
        const Pose t = forward_kinematics(P, c);
        const IKOutcome o = solve_ci1(t, P, st);
        REQUIRE_MESSAGE(roundtrip_ok(o, st), "case ", i, " status ", to_string(o.status));
        CHECK(std::get<ConfigCI1>(*o.config).within_limits(P));
        iters += o.iterations;
    }
    CHECK(double(iters) / n <= 20.0);
}

TEST_CASE("ci1 residual root and bracketing") {
    StructuralParams P;
    std::mt19937_64 rng(24);
    for (int i = 0; i < 100; ++i) {
        ConfigCI1 c = random_ci1(rng, P);
        c.theta2 = uni(rng, 0.05, P.theta2_max);
        const Pose t = forward_kinematics(P, c);
        const ResidualCI1 r = residual_ci1(c.theta2, t, P);
        REQUIRE(r.valid);
        CHECK(std::abs(r.value) < 1e-5 * (1.0 + std::abs(r.l1) + r.l2) * P.L20);

        // a sign-change bracket exists on (0, theta2_max]
        double prev = 0.0;
        bool prev_ok = false, bracket = false;
        for (int k = 0; k <= 400; ++k) {
            const double th = 1e-6 + (P.theta2_max - 1e-6) * k / 400.0;
            const ResidualCI1 rr = residual_ci1(th, t, P);
            if (rr.valid && prev_ok && prev * rr.value <= 0.0) bracket = true;
            prev_ok = rr.valid;
            prev = rr.value;
        }
        CHECK(bracket);
    }
}

TEST_CASE("ci1 axis-aligned orientation keeps the linear-l1 path well-defined") {
    StructuralParams P;
    Pose t;
    t.p = Vec3(0, 0, 110.0);  // straight CI-1 reach: L1 = 10
    const IKOutcome o = solve_ci1(t, P);
    REQUIRE(o.solved());
    const auto& c = std::get<ConfigCI1>(*o.config);
    CHECK(c.L1 == doctest::Approx(10.0).epsilon(1e-6));
    CHECK(c.theta1 < 1e-4);

    // residual is evaluable with a_z = 1 (the Eq.-18 denominator loses its
    // l2 term)
    const ResidualCI1 r = residual_ci1(0.3, t, P);
    CHECK(r.valid);
}

TEST_CASE("scalar residual derivative matches an independent difference") {
    StructuralParams P;
    std::mt19937_64 rng(25);
    int checked = 0;
    while (checked < 100) {
        const bool ci1 = checked % 2 == 0;
        Pose t;
        double x;
        if (ci1) {
            const ConfigCI1 c = random_ci1(rng, P);
            t = forward_kinematics(P, c);
            x = c.theta2;
        } else {
            const ConfigCI2 c = random_ci2(rng, P);
            t = forward_kinematics(P, c);
            x = c.theta1;
        }
        x = std::clamp(x + uni(rng, -0.02, 0.02), 1e-4, M_PI - 1e-4);
        auto eval = [&](double th) -> double {
            if (ci1) {
                const ResidualCI1 r = residual_ci1(th, t, P);
                return r.valid ? r.value : std::numeric_limits<double>::quiet_NaN();
            }
            const ResidualCI2 r = residual_ci2(th, t, P);
            return r.valid ? r.value : std::numeric_limits<double>::quiet_NaN();
        };
        // the solver's derivative stencil
        const double h = 1e-7;
        const double fp = eval(x + h), fm = eval(x - h);
        if (!std::isfinite(fp) || !std::isfinite(fm)) continue;
        const double solver_d = (fp - fm) / (2.0 * h);
        const double oracle_d = richardson_derivative(eval, x, 1e-5);
        if (!std::isfinite(oracle_d) || std::abs(oracle_d) < 1e-6) continue;
        CHECK(std::abs(solver_d - oracle_d) <= 1e-4 * std::abs(oracle_d) + 1e-9);
        ++checked;
    }
}

TEST_CASE("recover_orientation_angles planar and degenerate conventions") {
    StructuralParams P;

    // planar config: both segments bend in the same plane, delta1 = delta2
    ConfigCI2 c;
    c.Ls = 40.0;
    c.phi = 0.0;
    c.theta1 = 0.8;
    c.delta1 = 0.9;
    c.theta2 = 1.1;
    c.delta2 = 0.9;
    const Pose t = forward_kinematics(P, c);
    const double l1 = virtual_length(P.L10, c.theta1);
    const double l2 = virtual_length(P.L20, c.theta2);
    const LineSegmentShape s = shape_points(t, P, l1, l2, c.Ls);
    const OrientationAngles ang = recover_orientation_angles(s, t, c.theta1, c.theta2, P);
    CHECK(wrap_angle(ang.delta1 - ang.delta2) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(wrap_angle(ang.delta1 - c.delta1) == doctest::Approx(0.0).epsilon(1e-8));
    CHECK(wrap_angle(ang.phi - c.phi) == doctest::Approx(0.0).epsilon(1e-8));

    // fully straight: convention delta1 = delta2 = 0, phi = roll of R
    ConfigCI2 cs;
    cs.Ls = 50.0;
    cs.phi = 1.234;
    const Pose ts = forward_kinematics(P, cs);
    const LineSegmentShape ss = shape_points(ts, P, P.L10 / 2, P.L20 / 2, cs.Ls);
    const OrientationAngles as = recover_orientation_angles(ss, ts, 0.0, 0.0, P);
    CHECK(as.delta1 == 0.0);
    CHECK(as.delta2 == 0.0);
    CHECK(as.phi == doctest::Approx(1.234).epsilon(1e-10));
}

TEST_CASE("recover_orientation_angles roundtrip over random shapes") {
    StructuralParams P;
    std::mt19937_64 rng(26);
    for (int i = 0; i < 500; ++i) {
        const ConfigCI2 c = random_ci2(rng, P);
        const Pose t = forward_kinematics(P, c);
        const double l1 = virtual_length(P.L10, c.theta1);
        const double l2 = virtual_length(P.L20, c.theta2);
        const LineSegmentShape s = shape_points(t, P, l1, l2, c.Ls);
        const OrientationAngles ang = recover_orientation_angles(s, t, c.theta1, c.theta2, P);
        ConfigCI2 rec = c;
        rec.phi = ang.phi;
        rec.delta1 = ang.delta1;
        rec.delta2 = ang.delta2;
        const Pose back = forward_kinematics(P, rec);
        CHECK(orientation_angle(back.R, t.R) < 0.01);
    }
}

TEST_CASE("out-of-limit real solutions classify as infeasible orientation") {
    StructuralParams P;
    WorkspaceOptions opt;
    opt.n_sweep = 200;
    opt.grid_n = 100;

    // CI-1: a direction just past the bending-radius boundary
    const Pose seed = forward_kinematics(P, ConfigCI1{0.3, 0.6, 32.0, 0.7, 0.9, -0.6});
    const BoundarySet set = build_boundary_set(seed.p, P, ConfigClass::CI1, opt);
    const SymmetryFrame f = symmetry_frame_at(seed.p);
    int tested = 0;
    for (const auto& curve : set.curves) {
        if (curve.kind != BoundaryKind::TypeI_3 || curve.points.empty()) continue;
        for (std::size_t k = 0; k < curve.points.size() && tested < 5; k += 11) {
            const auto& pt = curve.points[k];
            // probe outward: a nearby disk point outside the region but on the
            // real-solution side
            for (int dir = 0; dir < 8 && tested < 5; ++dir) {
                const double ang = dir * M_PI / 4;
                const double x = pt.a_sx + 0.03 * std::cos(ang);
                const double z = pt.a_sz + 0.03 * std::sin(ang);
                if (x * x + z * z > 1.0) continue;
                if (set.region.contains(x, z)) continue;
                if (!set.region_unlimited.contains(x, z)) continue;
                const double ay = std::sqrt(std::max(0.0, 1.0 - x * x - z * z));
                const Vec3 a = rot_z(f.gamma) * Vec3(x, ay, z);
                const IKOutcome o = solve_ci1(pose_with_direction(seed.p, a), P);
                CHECK(o.status == SolveStatus::InfeasibleOrientation);
                ++tested;
            }
        }
    }
    CHECK(tested > 0);
}
