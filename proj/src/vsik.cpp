#include "ccik/vsik.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace ccik {

namespace {

constexpr double kThetaLo = 1e-6;
const double kThetaHi = M_PI - 1e-6;
constexpr double kStraightTol = 1e-6;
constexpr double kDerivStep = 1e-7;
constexpr int kScanPoints = 400;

double pose_pos_err(const Pose& a, const Pose& b) { return (a.p - b.p).norm(); }

// ---------------------------------------------------------------------------
// CI-2 scalar equation
// ---------------------------------------------------------------------------

struct Ci2Context {
    Vec3 p;
    Vec3 a;
    double az = 0.0;
    double b1 = 0.0;  // |q_xy|^2 with q = p - Lg a (wrist point)
    double b2 = 0.0;  // q_xy . a_xy
};

Ci2Context make_ci2_context(const Pose& target, const StructuralParams& params) {
    Ci2Context c;
    c.p = target.p;
    c.a = target.a();
    c.az = c.a.z();
    const Vec3 q = c.p - params.Lg * c.a;
    c.b1 = q.x() * q.x() + q.y() * q.y();
    c.b2 = q.x() * c.a.x() + q.y() * c.a.y();
    return c;
}

struct Ci2Eval {
    bool valid = false;
    bool complex_roots = false;
    double f = 0.0;
    double l1 = 0.0;
    double l2 = 0.0;
    double theta2 = 0.0;
    std::array<double, 2> roots{0.0, 0.0};
    int n_roots = 0;
};

// Evaluate the residual at theta1. Root selection: with l2_ref >= 0 the root
// closest to the previous iterate's l2 is tracked; otherwise branch 0 takes
// the root nearest L20/2 and branch 1 the other one.
Ci2Eval ci2_eval(const Ci2Context& c, const StructuralParams& P, double theta1, int branch,
                 double l2_ref) {
    Ci2Eval e;
    const double l1 = P.L10 * vl_ratio(theta1);
    const double u = l1 + P.Lr;
    const double ct = std::cos(theta1);
    const double A = ct * ct - c.az * c.az;
    const double B = 2.0 * (u * (ct * ct - 1.0) - c.b2);
    const double C = u * u * (ct * ct - 1.0) + c.b1;

    double roots[2];
    int n = 0;
    const double scale = std::max({1.0, std::abs(B) / P.L20, std::abs(C) / (P.L20 * P.L20)});
    if (std::abs(A) < 1e-14 * scale) {
        if (B != 0.0) roots[n++] = -C / B;
    } else {
        double disc = B * B - 4.0 * A * C;
        if (disc < 0.0) {
            // tolerate rounding at exact double roots (planar-fold targets)
            if (disc > -1e-9 * (B * B + std::abs(4.0 * A * C))) {
                disc = 0.0;
            } else {
                e.complex_roots = true;
                return e;
            }
        }
        const double sq = std::sqrt(disc);
        const double qq = (B != 0.0) ? -0.5 * (B + std::copysign(sq, B)) : 0.5 * sq;
        roots[n++] = qq / A;
        if (std::abs(qq) > 1e-300) roots[n++] = C / qq;
    }

    struct Cand {
        double l2, theta2, f;
    };
    Cand cand[2];
    int nc = 0;
    for (int i = 0; i < n; ++i) {
        const double l2 = roots[i];
        if (!std::isfinite(l2) || l2 <= 0.0) continue;
        const double L1r2 = u + l2;
        const double b3 = c.b2 + (c.az * c.az - 1.0) * l2;
        double c2 = b3 / L1r2 + c.az * ct;
        if (std::abs(c2) > 1.0 + 1e-9) continue;
        c2 = std::clamp(c2, -1.0, 1.0);
        const double th2 = std::acos(c2);
        cand[nc++] = {l2, th2, l2 / vl_ratio(std::min(th2, M_PI - 1e-12)) - P.L20};
    }
    e.n_roots = nc;
    for (int i = 0; i < nc; ++i) e.roots[i] = cand[i].l2;
    if (nc == 0) return e;

    int pick = 0;
    if (l2_ref >= 0.0) {
        if (nc == 2 && std::abs(cand[1].l2 - l2_ref) < std::abs(cand[0].l2 - l2_ref)) pick = 1;
    } else {
        if (nc == 2 && std::abs(cand[1].l2 - 0.5 * P.L20) < std::abs(cand[0].l2 - 0.5 * P.L20))
            pick = 1;
        if (branch == 1) {
            if (nc < 2) return e;  // "other" root does not exist here
            pick = 1 - pick;
        }
    }
    e.valid = true;
    e.f = cand[pick].f;
    e.l1 = l1;
    e.l2 = cand[pick].l2;
    e.theta2 = cand[pick].theta2;
    return e;
}

// ---------------------------------------------------------------------------
// CI-1 scalar equation
// ---------------------------------------------------------------------------

struct Ci1Context {
    Vec3 p;
    Vec3 a;
    double az = 0.0;
    double pa = 0.0;  // p . a
    double e1 = 0.0, e2 = 0.0;
};

Ci1Context make_ci1_context(const Pose& target, const StructuralParams& P) {
    Ci1Context c;
    c.p = target.p;
    c.a = target.a();
    c.az = c.a.z();
    c.pa = c.p.dot(c.a);
    c.e1 = -2.0 * (c.pa - P.Lg + P.Lr);
    c.e2 = c.p.squaredNorm() - 2.0 * P.Lg * c.pa + P.Lg * P.Lg - P.Lr * P.Lr;
    return c;
}

struct Ci1Eval {
    bool valid = false;
    double f = 0.0;
    double l1 = 0.0;
    double l2 = 0.0;
};

Ci1Eval ci1_eval(const Ci1Context& c, const StructuralParams& P, double theta2) {
    Ci1Eval e;
    const double l2 = P.L20 * vl_ratio(theta2);
    const double e3 = 2.0 * (1.0 - c.az);
    const double e4 = 2.0 * (c.p.z() - c.az * P.Lg + P.Lr);
    const double den = e3 * l2 + e4;
    if (std::abs(den) < 1e-9) return e;  // Eq.(18) pole
    const double l1 = (c.e1 * l2 + c.e2) / den;
    if (!std::isfinite(l1)) return e;
    const double ct = std::cos(theta2);
    const double d1 = c.e1 + e4 + e3 * P.Lr;
    const double d2 = e4 + c.e1 * c.az - e3 * (c.pa - P.Lg);
    const double d3 = c.e2 + e4 * P.Lr;
    const double d4 = c.e2 * c.az - e4 * (c.pa - P.Lg);
    e.valid = true;
    e.f = e3 * (ct + 1.0) * l2 * l2 + d1 * l2 * ct + d2 * l2 + d3 * ct + d4;
    e.l1 = l1;
    e.l2 = l2;
    return e;
}

// ---------------------------------------------------------------------------
// Scalar Newton with validity backtracking, plus a dense-scan fallback used
// when the plain iteration cannot place a verified solution.
// ---------------------------------------------------------------------------

struct ScalarSample {
    bool valid = false;
    double f = 0.0;
    double track = -1.0;  // root-tracking reference carried between evals
};

enum class NewtonStop { Converged, Overflow, Invalid, Stall, Budget };

template <class F>
NewtonStop newton_solve(const F& eval, double x0, double tol, int overflow_limit, int budget,
                        int& iters, double& x_out, double& track_out) {
    double x = std::clamp(x0, kThetaLo, kThetaHi);
    double ref = -1.0;
    ScalarSample s = eval(x, ref);
    if (!s.valid) {
        // probe for an evaluable starting point
        for (int i = 0; i < 25 && !s.valid; ++i) {
            x = kThetaLo + (kThetaHi - kThetaLo) * i / 24.0;
            s = eval(x, ref);
        }
        if (!s.valid) return NewtonStop::Invalid;
    }
    int overflow = 0;
    while (iters < budget) {
        if (std::abs(s.f) < tol) {
            x_out = x;
            track_out = s.track;
            return NewtonStop::Converged;
        }
        ref = s.track;
        const ScalarSample sp = eval(std::min(x + kDerivStep, kThetaHi), ref);
        const ScalarSample sm = eval(std::max(x - kDerivStep, kThetaLo), ref);
        double df;
        if (sp.valid && sm.valid) {
            df = (sp.f - sm.f) / (2.0 * kDerivStep);
        } else if (sp.valid) {
            df = (sp.f - s.f) / kDerivStep;
        } else if (sm.valid) {
            df = (s.f - sm.f) / kDerivStep;
        } else {
            return NewtonStop::Invalid;
        }
        if (df == 0.0) return NewtonStop::Stall;

        double xn = x - s.f / df;
        ++iters;
        if (xn > kThetaHi) {
            if (++overflow >= overflow_limit) return NewtonStop::Overflow;
        } else {
            overflow = 0;
        }
        xn = std::clamp(xn, kThetaLo, kThetaHi);
        ScalarSample sn = eval(xn, ref);
        for (int k = 0; !sn.valid && k < 40; ++k) {
            xn = 0.5 * (xn + x);
            sn = eval(xn, ref);
        }
        if (!sn.valid) return NewtonStop::Invalid;
        if (std::abs(xn - x) < 1e-13 && std::abs(s.f) > tol) return NewtonStop::Stall;
        x = xn;
        s = sn;
    }
    return NewtonStop::Budget;
}

// Candidate roots from a dense scan: sign-change brackets, interior |f|
// minima, and validity-edge polish (roots can sit exactly on the edge of the
// evaluable domain where the l2 quadratic turns complex).
std::vector<double> uniform_grid() {
    std::vector<double> xs(kScanPoints);
    for (int i = 0; i < kScanPoints; ++i) {
        xs[i] = kThetaLo + (kThetaHi - kThetaLo) * i / (kScanPoints - 1);
    }
    return xs;
}

template <class F>
std::vector<double> scan_candidates(const F& eval, const std::vector<double>& grid, double tol,
                                    int& iters) {
    const int n = static_cast<int>(grid.size());
    std::vector<double> xs = grid, fs(n);
    std::vector<bool> ok(n);
    for (int i = 0; i < n; ++i) {
        const ScalarSample s = eval(xs[i], -1.0);
        ok[i] = s.valid;
        fs[i] = s.valid ? s.f : std::numeric_limits<double>::infinity();
    }
    std::vector<double> out;
    auto bisect = [&](double a, double b, double fa) {
        for (int k = 0; k < 80; ++k) {
            const double m = 0.5 * (a + b);
            const ScalarSample sm = eval(m, -1.0);
            ++iters;
            if (!sm.valid) {
                b = m;
                continue;
            }
            if (std::abs(sm.f) < 0.5 * tol) {
                out.push_back(m);
                return;
            }
            if (fa * sm.f <= 0.0) {
                b = m;
            } else {
                a = m;
                fa = sm.f;
            }
            if (b - a < 1e-13) break;
        }
        out.push_back(0.5 * (a + b));
    };
    auto golden = [&](double a, double b) {
        const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
        auto absf = [&](double x) {
            const ScalarSample s = eval(x, -1.0);
            ++iters;
            return s.valid ? std::abs(s.f) : std::numeric_limits<double>::infinity();
        };
        double c = b - gr * (b - a), d = a + gr * (b - a);
        double fc = absf(c), fd = absf(d);
        for (int k = 0; k < 90 && b - a > 1e-13; ++k) {
            if (std::min(fc, fd) < 0.5 * tol) break;
            if (fc < fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - gr * (b - a);
                fc = absf(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + gr * (b - a);
                fd = absf(d);
            }
        }
        out.push_back(0.5 * (a + b));
    };
    for (int i = 0; i + 1 < n; ++i) {
        if (ok[i] && ok[i + 1] && fs[i] * fs[i + 1] <= 0.0) {
            bisect(xs[i], xs[i + 1], fs[i]);
        } else if (ok[i] != ok[i + 1]) {
            golden(xs[i], xs[i + 1]);
        }
    }
    for (int i = 1; i + 1 < n; ++i) {
        if (ok[i - 1] && ok[i] && ok[i + 1] && std::abs(fs[i]) < std::abs(fs[i - 1]) &&
            std::abs(fs[i]) < std::abs(fs[i + 1])) {
            golden(xs[i - 1], xs[i + 1]);
        }
    }
    return out;
}


// Window edges of the CI-2 residual: zeros of the l2-quadratic discriminant
// and of its constant coefficient (where a root crosses zero), plus the
// points where the leading coefficient vanishes (a root crosses infinity).
std::vector<double> ci2_breakpoints(const Ci2Context& c, const StructuralParams& P) {
    auto disc_of = [&](double theta1) {
        const double l1 = P.L10 * vl_ratio(theta1);
        const double u = l1 + P.Lr;
        const double ct = std::cos(theta1);
        const double A = ct * ct - c.az * c.az;
        const double B = 2.0 * (u * (ct * ct - 1.0) - c.b2);
        const double C = u * u * (ct * ct - 1.0) + c.b1;
        return B * B - 4.0 * A * C;
    };
    auto const_of = [&](double theta1) {
        const double l1 = P.L10 * vl_ratio(theta1);
        const double u = l1 + P.Lr;
        const double ct = std::cos(theta1);
        return u * u * (ct * ct - 1.0) + c.b1;
    };
    std::vector<double> bps;
    auto add_zeros = [&](auto&& fn) {
        constexpr int n = 1024;
        double xp = kThetaLo, fp = fn(xp);
        for (int i = 1; i < n; ++i) {
            const double x = kThetaLo + (kThetaHi - kThetaLo) * i / (n - 1);
            const double f = fn(x);
            if (fp == 0.0) bps.push_back(xp);
            if (fp * f < 0.0) {
                double a = xp, b = x, fa = fp;
                for (int k = 0; k < 60 && b - a > 1e-12; ++k) {
                    const double m = 0.5 * (a + b), fm = fn(m);
                    if (fa * fm <= 0.0) b = m;
                    else { a = m; fa = fm; }
                }
                bps.push_back(0.5 * (a + b));
            }
            xp = x;
            fp = f;
        }
    };
    add_zeros(disc_of);
    add_zeros(const_of);
    const double az = std::clamp(std::abs(c.az), 0.0, 1.0);
    bps.push_back(std::acos(az));
    bps.push_back(M_PI - std::acos(az));
    return bps;
}

std::vector<double> ci2_scan_grid(const Ci2Context& c, const StructuralParams& P) {
    std::vector<double> grid = uniform_grid();
    std::vector<double> bps = ci2_breakpoints(c, P);
    std::sort(bps.begin(), bps.end());
    for (std::size_t i = 0; i < bps.size(); ++i) {
        const double b = bps[i];
        for (double d : {-1e-7, 1e-7}) {
            const double x = b + d;
            if (x > kThetaLo && x < kThetaHi) grid.push_back(x);
        }
        if (i + 1 < bps.size()) {
            const double m = 0.5 * (bps[i] + bps[i + 1]);
            if (m > kThetaLo && m < kThetaHi) grid.push_back(m);
        }
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

// ---------------------------------------------------------------------------
// Recovery of the remaining configuration variables
// ---------------------------------------------------------------------------

struct Candidate {
    bool real = false;      // a real solution of the scalar equation
    bool feasible = false;  // within configuration limits and FK-verified
    Config config;
    double pos_err = std::numeric_limits<double>::infinity();
    double ori_err = std::numeric_limits<double>::infinity();
};

Candidate classify_ci2_root(double theta1, const Ci2Eval& ev, const Pose& target,
                            const StructuralParams& P, const SolverSettings& st) {
    Candidate out;
    if (ev.theta2 >= M_PI - 1e-9) return out;
    const double ct = std::cos(theta1);
    const double L1r2 = ev.l1 + P.Lr + ev.l2;
    const double L2g = ev.l2 + P.Lg;
    const double az = target.a().z();
    const double Ls = target.p.z() - L2g * az - L1r2 * ct - ev.l1;
    const LineSegmentShape shape = shape_points(target, P, ev.l1, ev.l2, Ls);

    OrientationAngles ang;
    try {
        ang = recover_orientation_angles(shape, target, theta1, ev.theta2, P);
    } catch (const std::domain_error&) {
        return out;
    }
    ConfigCI2 cfg;
    cfg.Ls = Ls;
    cfg.phi = ang.phi;
    cfg.theta1 = theta1;
    cfg.delta1 = ang.delta1;
    cfg.theta2 = ev.theta2;
    cfg.delta2 = ang.delta2;

    const Pose fk = forward_kinematics(P, cfg);
    out.pos_err = pose_pos_err(fk, target);
    out.ori_err = orientation_angle(fk.R, target.R);
    if (out.pos_err < st.pos_tol && out.ori_err < st.ori_tol) {
        out.real = true;
        out.feasible = cfg.within_limits(P);
        out.config = cfg;
    }
    return out;
}

Candidate classify_ci1_root(double theta2, const Ci1Eval& ev, const Pose& target,
                            const StructuralParams& P, const SolverSettings& st) {
    Candidate out;
    const double L1r2 = ev.l1 + P.Lr + ev.l2;
    if (L1r2 <= 0.0) return out;  // mirrored-norm ghost root
    const double L2g = ev.l2 + P.Lg;
    const Vec3 p2 = target.p - L2g * target.a();
    const double carg = (p2.z() - ev.l1) / L1r2;
    if (std::abs(carg) > 1.0 + 1e-9) return out;
    const double theta1 = std::acos(std::clamp(carg, -1.0, 1.0));

    if (ev.l1 < 0.0) {
        // Real root but the required insertion is negative: a configuration
        // limit violation, not a non-real solution.
        out.real = true;
        return out;
    }
    const double L1 = ev.l1 / vl_ratio(std::min(theta1, M_PI - 1e-12));

    const LineSegmentShape shape = shape_points(target, P, ev.l1, ev.l2, 0.0);
    OrientationAngles ang;
    try {
        ang = recover_orientation_angles(shape, target, theta1, theta2, P);
    } catch (const std::domain_error&) {
        return out;
    }
    ConfigCI1 cfg;
    cfg.phi = ang.phi;
    cfg.theta1 = theta1;
    cfg.L1 = L1;
    cfg.delta1 = ang.delta1;
    cfg.theta2 = theta2;
    cfg.delta2 = ang.delta2;

    if (theta1 >= M_PI - 1e-9) return out;
    const Pose fk = forward_kinematics(P, cfg);
    out.pos_err = pose_pos_err(fk, target);
    out.ori_err = orientation_angle(fk.R, target.R);
    if (out.pos_err < st.pos_tol && out.ori_err < st.ori_tol) {
        out.real = true;
        out.feasible = cfg.within_limits(P);
        out.config = cfg;
    }
    return out;
}

}  // namespace

void SolverSettings::validate() const {
    if (!(residual_ci2 > 0.0 && residual_ci1 > 0.0 && max_iterations >= 1 && pos_tol > 0.0 &&
          ori_tol > 0.0 && theta_overflow_count >= 1)) {
        throw std::invalid_argument("SolverSettings fields must be strictly positive");
    }
}

const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Solved: return "solved";
        case SolveStatus::InfeasibleOrientation: return "infeasible_orientation";
        case SolveStatus::NonRealSolution: return "non_real_solution";
        case SolveStatus::NoConvergence: return "no_convergence";
    }
    return "unknown";
}

ResidualCI2 residual_ci2(double theta1, const Pose& target, const StructuralParams& params,
                         RootBranch branch) {
    const Ci2Context ctx = make_ci2_context(target, params);
    const Ci2Eval e =
        ci2_eval(ctx, params, theta1, branch == RootBranch::first_root ? 0 : 1, -1.0);
    ResidualCI2 r;
    r.valid = e.valid;
    r.complex_roots = e.complex_roots;
    r.value = e.f;
    r.l1 = e.l1;
    r.l2 = e.l2;
    r.theta2 = e.theta2;
    r.l2_roots = e.roots;
    r.n_roots = e.n_roots;
    return r;
}

ResidualCI1 residual_ci1(double theta2, const Pose& target, const StructuralParams& params) {
    const Ci1Context ctx = make_ci1_context(target, params);
    const Ci1Eval e = ci1_eval(ctx, params, theta2);
    ResidualCI1 r;
    r.valid = e.valid;
    r.value = e.f;
    r.l1 = e.l1;
    r.l2 = e.l2;
    return r;
}

OrientationAngles recover_orientation_angles(const LineSegmentShape& shape, const Pose& target,
                                             double theta1, double theta2,
                                             const StructuralParams& /*params*/) {
    const Vec3& p1 = shape.p1;
    const Vec3& p2 = shape.p2;
    const Vec3 a = target.a();
    const Mat3& R = target.R;
    OrientationAngles out;

    const bool straight1 = theta1 < kStraightTol;
    const bool straight2 = theta2 < kStraightTol;

    if (straight1 && straight2) {
        out.delta1 = out.delta2 = 0.0;
        out.phi = std::atan2(R(1, 0), R(0, 0));
        return out;
    }
    if (straight1) {
        // Bending plane of segment 1 is undefined; fold the freedom into phi.
        out.delta1 = 0.0;
        const double beta = std::atan2(a.y(), a.x());  // phi - delta2
        const Mat3 M = rot_y(-theta2) * rot_z(-beta) * R;
        out.delta2 = std::atan2(M(1, 0), M(0, 0));
        out.phi = wrap_angle(beta + out.delta2);
        return out;
    }
    const double p2xy = std::hypot(p2.x(), p2.y());
    if (p2xy < 1e-12) {
        throw std::domain_error("recover_orientation_angles: degenerate p2 direction");
    }
    const double alpha = std::atan2(p2.y(), p2.x());  // phi - delta1
    if (straight2) {
        out.delta2 = 0.0;
        const Mat3 M = rot_y(-theta1) * rot_z(-alpha) * R;
        out.delta1 = std::atan2(M(1, 0), M(0, 0));
        out.phi = wrap_angle(alpha + out.delta1);
        return out;
    }

    // delta1 - delta2: signed angle between the two bending-plane normals.
    Vec3 n1 = Vec3(0, 0, 1).cross(p2);
    Vec3 n2 = (p2 - p1).cross(a);
    const double n1n = n1.norm(), n2n = n2.norm();
    if (n1n < 1e-12 || n2n < 1e-12) {
        throw std::domain_error("recover_orientation_angles: degenerate bending plane");
    }
    n1 /= n1n;
    n2 /= n2n;
    const double trip = p1.cross(p2).dot(target.p);
    // trip = 0 covers both coplanar cases: same bending direction (aligned
    // normals, delta1 = delta2) and the fold-back shape (opposite normals,
    // delta1 - delta2 = pi); the arccos term distinguishes them.
    const double sg = (std::abs(trip) < 1e-9) ? 1.0 : (trip > 0.0 ? 1.0 : -1.0);
    const double dd = sg * std::acos(std::clamp(n1.dot(n2), -1.0, 1.0));

    const Mat3 M = R.transpose() * rot_z(alpha) * rot_y(theta1) * rot_z(dd) * rot_y(theta2);
    if (std::abs(M(2, 2) - 1.0) > 1e-6) {
        throw std::domain_error("recover_orientation_angles: inconsistent angle pipeline");
    }
    out.delta2 = -std::atan2(M(1, 0), M(0, 0));
    out.delta1 = wrap_angle(dd + out.delta2);
    out.phi = wrap_angle(alpha + out.delta1);
    return out;
}

namespace {

IKOutcome finish(const Candidate& c, SolveStatus status, int iters, RootBranch branch) {
    IKOutcome o;
    o.status = status;
    o.iterations = iters;
    o.branch_used = branch;
    o.pos_err = c.pos_err;
    o.ori_err = c.ori_err;
    if (status == SolveStatus::Solved) o.config = c.config;
    return o;
}

}  // namespace

IKOutcome solve_ci2(const Pose& target, const StructuralParams& params,
                    const SolverSettings& st) {
    const Ci2Context ctx = make_ci2_context(target, params);
    int iters = 0;
    bool saw_real = false;
    bool saw_near_miss = false;
    Candidate best_infeasible;

    // Straight axial target: the quadratic degenerates, solve in closed form.
    if (ctx.b1 < 1e-14 && ctx.az > 1.0 - 1e-12) {
        ConfigCI2 cfg;
        cfg.Ls = target.p.z() - (params.L10 + params.Lr + params.L20 + params.Lg);
        cfg.phi = std::atan2(target.R(1, 0), target.R(0, 0));
        const Pose fk = forward_kinematics(params, cfg);
        Candidate c;
        c.pos_err = pose_pos_err(fk, target);
        c.ori_err = orientation_angle(fk.R, target.R);
        if (c.pos_err < st.pos_tol && c.ori_err < st.ori_tol) {
            c.real = true;
            c.config = cfg;
            if (cfg.within_limits(params)) {
                c.feasible = true;
                return finish(c, SolveStatus::Solved, 0, RootBranch::first_root);
            }
            return finish(c, SolveStatus::InfeasibleOrientation, 0, RootBranch::first_root);
        }
    }

    auto consider = [&](double root, const Ci2Eval& e, RootBranch label)
        -> std::optional<IKOutcome> {
        const Candidate c = classify_ci2_root(root, e, target, params, st);
        if (c.feasible) return finish(c, SolveStatus::Solved, iters, label);
        if (c.real) {
            saw_real = true;
            if (!best_infeasible.real) best_infeasible = c;
        } else {
            saw_near_miss = true;
        }
        return std::nullopt;
    };
    auto run = [&](double x0, int branch, RootBranch label) -> std::optional<IKOutcome> {
        auto eval = [&](double x, double ref) {
            const Ci2Eval e = ci2_eval(ctx, params, x, branch, ref);
            return ScalarSample{e.valid, e.f, e.l2};
        };
        // bound each attempt so a wandering start cannot eat the whole budget
        const int budget = std::min(iters + std::max(st.max_iterations / 5, 10),
                                    st.max_iterations);
        double root = 0.0, track = -1.0;
        const NewtonStop stop = newton_solve(eval, x0, st.residual_ci2, st.theta_overflow_count,
                                             budget, iters, root, track);
        if (stop != NewtonStop::Converged) return std::nullopt;
        const Ci2Eval e = ci2_eval(ctx, params, root, branch, track);
        if (!e.valid) return std::nullopt;
        return consider(root, e, label);
    };

    const double x0 = std::acos(std::clamp(std::abs(ctx.az), 0.0, 1.0));
    // paper order: one l2 root first, then the other; one guarded restart each
    for (const double start : {x0, 0.9 * M_PI}) {
        for (int branch = 0; branch <= 1; ++branch) {
            const auto label = branch == 0 ? RootBranch::first_root : RootBranch::second_root;
            if (auto out = run(start, branch, label)) return *out;
            if (iters >= st.max_iterations) break;
        }
        if (iters >= st.max_iterations) break;
    }

    // Completeness fallback: enumerate every root of both branch functions.
    const std::vector<double> scan_grid =
        st.completeness_scan ? ci2_scan_grid(ctx, params) : std::vector<double>{};
    for (int branch = 0; branch <= 1 && st.completeness_scan; ++branch) {
        const auto label = branch == 0 ? RootBranch::first_root : RootBranch::second_root;
        auto eval = [&](double x, double ref) {
            const Ci2Eval e = ci2_eval(ctx, params, x, branch, ref);
            return ScalarSample{e.valid, e.f, e.l2};
        };
        for (const double root : scan_candidates(eval, scan_grid, st.residual_ci2, iters)) {
            const Ci2Eval e = ci2_eval(ctx, params, root, branch, -1.0);
            if (!e.valid || std::abs(e.f) > st.residual_ci2) continue;
            if (auto out = consider(root, e, label)) return *out;
        }
    }

    if (saw_real) {
        return finish(best_infeasible, SolveStatus::InfeasibleOrientation, iters,
                      RootBranch::first_root);
    }
    return finish(Candidate{}, saw_near_miss ? SolveStatus::NoConvergence
                                             : SolveStatus::NonRealSolution,
                  iters, RootBranch::first_root);
}

IKOutcome solve_ci1(const Pose& target, const StructuralParams& params,
                    const SolverSettings& st) {
    const Ci1Context ctx = make_ci1_context(target, params);
    int iters = 0;
    bool saw_real = false;
    bool saw_near_miss = false;
    Candidate best_infeasible;

    auto eval = [&](double x, double /*ref*/) {
        const Ci1Eval e = ci1_eval(ctx, params, x);
        return ScalarSample{e.valid, e.f, -1.0};
    };
    auto classify = [&](double root) -> std::optional<IKOutcome> {
        const Ci1Eval e = ci1_eval(ctx, params, root);
        if (!e.valid || std::abs(e.f) > st.residual_ci1) return std::nullopt;
        const Candidate c = classify_ci1_root(root, e, target, params, st);
        if (c.feasible) return finish(c, SolveStatus::Solved, iters, RootBranch::first_root);
        if (c.real) {
            saw_real = true;
            if (!best_infeasible.real) best_infeasible = c;
        } else {
            saw_near_miss = true;
        }
        return std::nullopt;
    };

    for (const double x0 : {0.5 * params.theta2_max, 0.9 * M_PI}) {
        const int budget = std::min(iters + std::max(st.max_iterations / 5, 10),
                                    st.max_iterations);
        double root = 0.0, track = -1.0;
        const NewtonStop stop = newton_solve(eval, x0, st.residual_ci1, st.theta_overflow_count,
                                             budget, iters, root, track);
        if (stop == NewtonStop::Converged) {
            if (auto out = classify(root)) return *out;
        }
        if (iters >= st.max_iterations) break;
    }

    if (st.completeness_scan) {
        for (const double root :
             scan_candidates(eval, uniform_grid(), st.residual_ci1, iters)) {
            if (auto out = classify(root)) return *out;
        }
    }

    if (saw_real) {
        return finish(best_infeasible, SolveStatus::InfeasibleOrientation, iters,
                      RootBranch::first_root);
    }
    return finish(Candidate{}, saw_near_miss ? SolveStatus::NoConvergence
                                             : SolveStatus::NonRealSolution,
                  iters, RootBranch::first_root);
}

IKOutcome solve(const Pose& target, const StructuralParams& params, ConfigClass cls,
                const SolverSettings& settings) {
    return cls == ConfigClass::CI1 ? solve_ci1(target, params, settings)
                                   : solve_ci2(target, params, settings);
}

}  // namespace ccik
