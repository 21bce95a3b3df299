#include "ccik/workspace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace ccik {

namespace {

constexpr double kAxisTol = 1e-9;
constexpr double kLiftTol = 1e-9;
constexpr double kLimitTol = 1e-9;
constexpr double kThetaEps = 1e-6;

struct Line {
    double A = 0.0, B = 0.0, C = 0.0;  // A a_sx + B a_sz + C = 0
};

// Eq.-type coefficients of the theta2-driven boundary line family.
Line line21(double psx, double psz, const StructuralParams& P, double theta2) {
    const double l2 = P.L20 * vl_ratio(theta2);
    const double L2g = l2 + P.Lg;
    const double L2rc = l2 + P.Lr + psz;
    const double c2 = std::cos(theta2);
    Line L;
    L.A = -2.0 * psx * (L2rc + L2g * c2);
    L.B = -L2g * L2g + psx * psx - L2rc * L2rc - 2.0 * L2g * L2rc * c2;
    L.C = 2.0 * L2g * L2rc + (L2g * L2g + psx * psx + L2rc * L2rc) * c2;
    return L;
}

Line line21_deriv(double psx, double psz, const StructuralParams& P, double theta2) {
    const double l2 = P.L20 * vl_ratio(theta2);
    const double dl2 = P.L20 * vl_ratio_deriv(theta2);
    const double L2g = l2 + P.Lg;
    const double L2rc = l2 + P.Lr + psz;
    const double c2 = std::cos(theta2);
    const double s2 = std::sin(theta2);
    Line d;
    d.A = -2.0 * psx * (dl2 * (1.0 + c2) - L2g * s2);
    d.B = -2.0 * dl2 * (L2g + L2rc) * (1.0 + c2) + 2.0 * L2g * L2rc * s2;
    d.C = 2.0 * dl2 * (L2g + L2rc) * (1.0 + c2) - (L2g * L2g + psx * psx + L2rc * L2rc) * s2;
    return d;
}

// Line from the proximal bending-angle relation given l1 and theta1.
Line line27(double psx, double psz, const StructuralParams& P, double l1, double theta1) {
    const double L1z = l1 - psz;
    const double L1gr = l1 - P.Lg + P.Lr;
    const double c1 = std::cos(theta1);
    Line L;
    L.A = 2.0 * psx * (L1z + L1gr * c1);
    L.B = psx * psx - L1gr * L1gr - L1z * L1z - 2.0 * L1gr * L1z * c1;
    L.C = 2.0 * L1gr * L1z + (psx * psx + L1gr * L1gr + L1z * L1z) * c1;
    return L;
}

bool intersect(const Line& u, const Line& v, double& x, double& z) {
    const double det = u.A * v.B - u.B * v.A;
    const double scale = std::abs(u.A) + std::abs(u.B) + std::abs(v.A) + std::abs(v.B);
    if (std::abs(det) < 1e-12 * scale * scale) return false;
    x = (-u.C * v.B + u.B * v.C) / det;
    z = (-u.A * v.C + u.C * v.A) / det;
    return true;
}

// Virtual length of the first tangent segment from the position triangle
// (independent of theta1). Returns false near the denominator pole.
bool l1_from_position(double psx, double psz, const StructuralParams& P, double theta2,
                      double& l1) {
    const double l2 = P.L20 * vl_ratio(theta2);
    const double L2g = l2 + P.Lg;
    const double m = P.Lr + l2;
    const double c2 = std::cos(theta2);
    const double den = 2.0 * (L2g * c2 + m + psz);
    if (std::abs(den) < 1e-9) return false;
    l1 = (psx * psx + psz * psz - L2g * L2g - m * m - 2.0 * L2g * m * c2) / den;
    return true;
}

double l1_from_eq18(double psx, double psz, const StructuralParams& P, double l2, double asx,
                    double asz, bool& ok) {
    const double pa = psx * asx + psz * asz;
    const double e1 = -2.0 * (pa - P.Lg + P.Lr);
    const double e2 = psx * psx + psz * psz - 2.0 * P.Lg * pa + P.Lg * P.Lg - P.Lr * P.Lr;
    const double e3 = 2.0 * (1.0 - asz);
    const double e4 = 2.0 * (psz - asz * P.Lg + P.Lr);
    const double den = e3 * l2 + e4;
    ok = std::abs(den) > 1e-9;
    return ok ? (e1 * l2 + e2) / den : 0.0;
}

bool in_disk(double x, double z) { return x * x + z * z <= 1.0 + kLiftTol; }

struct SweepRange {
    double lo, hi;
    int n;
    double at(int i) const { return lo + (hi - lo) * i / (n - 1); }
};

bool ci1_admissible(const DirectionSample& s, const StructuralParams& P) {
    if (s.theta1 < -kLimitTol || s.theta1 > P.theta1_max + kLimitTol) return false;
    if (s.length_var < P.r1_min * s.theta1 - kLimitTol || s.length_var > P.L10 + kLimitTol)
        return false;
    return true;
}

}  // namespace

const char* to_string(BoundaryKind k) {
    switch (k) {
        case BoundaryKind::TypeI_1: return "type1_1";
        case BoundaryKind::TypeI_2: return "type1_2";
        case BoundaryKind::TypeI_3: return "type1_3";
        case BoundaryKind::TypeI_4: return "type1_4";
        case BoundaryKind::TypeII: return "type2";
    }
    return "unknown";
}

const char* to_string(SweepParam p) {
    return p == SweepParam::theta1 ? "theta1" : "theta2";
}

const char* to_string(DirectionClass c) {
    switch (c) {
        case DirectionClass::Feasible: return "feasible";
        case DirectionClass::InfeasibleTypeI: return "infeasible_type1";
        case DirectionClass::InfeasibleTypeII: return "infeasible_type2";
    }
    return "unknown";
}

SymmetryFrame symmetry_frame_at(const Vec3& position) {
    SymmetryFrame f;
    const double r = std::hypot(position.x(), position.y());
    f.on_axis = r < kAxisTol;
    f.gamma = f.on_axis ? 0.0 : std::atan2(position.y(), position.x());
    f.p_s = Vec3(r, 0.0, position.z());
    return f;
}

SymmetryFrame to_symmetry_frame(const Pose& target) {
    SymmetryFrame f = symmetry_frame_at(target.p);
    f.a_s = rot_z(-f.gamma) * target.a();
    return f;
}

std::optional<DirectionSample> ci1_direction(const SymmetryFrame& f, const StructuralParams& p,
                                             double theta1, double theta2) {
    const double psx = f.p_s.x(), psz = f.p_s.z();
    double l1;
    if (!l1_from_position(psx, psz, p, theta2, l1)) return std::nullopt;
    if (l1 < 0.0) return std::nullopt;
    if (psx < kAxisTol) return std::nullopt;
    const double l2 = p.L20 * vl_ratio(theta2);
    const double L1r2 = l1 + p.Lr + l2;
    const double L2g = l2 + p.Lg;
    const double c1 = std::cos(theta1);
    DirectionSample s;
    s.a_sz = (psz - l1 - L1r2 * c1) / L2g;
    s.a_sx = (L1r2 * std::cos(theta2) + L2g - (psz - l1) * s.a_sz) / psx;
    s.ay_sq = 1.0 - s.a_sx * s.a_sx - s.a_sz * s.a_sz;  // may be negative: off-disk
    s.l1 = l1;
    s.theta1 = theta1;
    s.length_var = l1 / vl_ratio(std::min(theta1, M_PI - 1e-12));
    return s;
}

int ci2_directions(const SymmetryFrame& f, const StructuralParams& p, double theta1,
                   double theta2, std::array<DirectionSample, 2>& out) {
    const double psx = f.p_s.x(), psz = f.p_s.z();
    if (psx < kAxisTol) return 0;
    const double l1 = p.L10 * vl_ratio(theta1);
    const double l2 = p.L20 * vl_ratio(theta2);
    const double L1r2 = l1 + p.Lr + l2;
    const double L2g = l2 + p.Lg;
    const double c1 = std::cos(theta1), c2 = std::cos(theta2);
    const double A5 = L2g * L2g;
    const double B5 = 2.0 * L2g * L1r2 * c1;
    const double C5 = L1r2 * L1r2 * (c1 * c1 - 1.0) - L2g * L2g + psx * psx -
                      2.0 * L2g * L1r2 * c2;
    double disc = B5 * B5 - 4.0 * A5 * C5;
    if (disc < 0.0) {
        if (disc > -1e-9 * (B5 * B5 + std::abs(4.0 * A5 * C5))) disc = 0.0;
        else return 0;
    }
    const double sq = std::sqrt(disc);
    const double cand[2] = {(-B5 + sq) / (2.0 * A5), (-B5 - sq) / (2.0 * A5)};
    int mask = 0;
    for (int k = 0; k < 2; ++k) {
        const double asz = cand[k];
        DirectionSample s;
        s.a_sz = asz;
        s.a_sx = (-L2g * asz * asz - L1r2 * c1 * asz + L2g + L1r2 * c2) / psx;
        s.ay_sq = 1.0 - s.a_sx * s.a_sx - s.a_sz * s.a_sz;  // may be negative: off-disk
        s.l1 = l1;
        s.theta1 = theta1;
        s.length_var = psz - L2g * asz - L1r2 * c1 - l1;  // Ls
        out[k] = s;
        mask |= 1 << k;
    }
    return mask;
}

// ---------------------------------------------------------------------------
// Type-I boundary curves
// ---------------------------------------------------------------------------

BoundaryCurve ci1_boundary_1(const SymmetryFrame& f, const StructuralParams& p,
                             const WorkspaceOptions& opt) {
    BoundaryCurve c;
    c.kind = BoundaryKind::TypeI_1;
    c.driving_param = SweepParam::theta1;
    const double psx = f.p_s.x(), psz = f.p_s.z();
    const Line L = line21(psx, psz, p, p.theta2_max);
    const SweepRange sweep{0.0, p.theta1_max, opt.n_sweep};
    for (int i = 0; i < sweep.n; ++i) {
        const double th1 = sweep.at(i);
        const auto s = ci1_direction(f, p, th1, p.theta2_max);
        if (!s || s->ay_sq < -kLiftTol || !ci1_admissible(*s, p)) continue;
        // place the point exactly on the boundary line
        double x = s->a_sx, z = s->a_sz;
        if (std::abs(L.A) > 1e-12) x = -(L.B * z + L.C) / L.A;
        if (!in_disk(x, z)) continue;
        c.points.push_back({th1, x, z});
    }
    return c;
}

BoundaryCurve ci1_boundary_2(const SymmetryFrame& f, const StructuralParams& p,
                             const WorkspaceOptions& opt) {
    BoundaryCurve c;
    c.kind = BoundaryKind::TypeI_2;
    c.driving_param = SweepParam::theta2;
    const double psx = f.p_s.x(), psz = f.p_s.z();
    const double th1 = p.theta1_max;
    const double c1 = std::cos(th1);
    const SweepRange sweep{kThetaEps, p.theta2_max, opt.n_sweep};
    for (int i = 0; i < sweep.n; ++i) {
        const double th2 = sweep.at(i);
        const double l2 = p.L20 * vl_ratio(th2);
        const double L2g = l2 + p.Lg;
        const double L2rc = l2 + p.Lr + psz;
        // quadratic in a_sz: the theta1 relation combined with line (A1,B1,C1)
        const Line L1c = line21(psx, psz, p, th2);
        if (std::abs(L1c.A) < 1e-12) continue;
        const double A2 = -2.0 * L2g * L2g;
        const double B2 = -2.0 * L2g * L2rc * (c1 - 1.0);
        const double C2 = -2.0 * L2g * psx * (1.0 + c1);
        const double D2 = L2g * L2g - L2rc * L2rc + psx * psx +
                          (L2g * L2g + L2rc * L2rc + psx * psx) * c1;
        const double qa = A2;
        const double qb = B2 - C2 * L1c.B / L1c.A;
        const double qc = D2 - C2 * L1c.C / L1c.A;
        double disc = qb * qb - 4.0 * qa * qc;
        if (disc < 0.0) {
            if (disc > -1e-9 * (qb * qb + std::abs(4.0 * qa * qc))) disc = 0.0;
            else continue;
        }
        const double sq = std::sqrt(disc);
        double l1ref;
        if (!l1_from_position(psx, psz, p, th2, l1ref) || l1ref < 0.0) continue;
        for (const double z : {(-qb + sq) / (2.0 * qa), (-qb - sq) / (2.0 * qa)}) {
            const double x = -(L1c.B * z + L1c.C) / L1c.A;
            if (!in_disk(x, z)) continue;
            bool ok;
            const double l1 = l1_from_eq18(psx, psz, p, l2, x, z, ok);
            if (!ok || std::abs(l1 - l1ref) > 1e-6 * (1.0 + std::abs(l1ref))) continue;
            const double L1 = l1 / vl_ratio(th1);
            if (L1 < p.r1_min * th1 - kLimitTol || L1 > p.L10 + kLimitTol) continue;
            c.points.push_back({th2, x, z});
        }
    }
    return c;
}

namespace {

// Shared machinery for the length-bound boundaries: sweep theta2, fix l1 from
// the position triangle, derive theta1 from the active bound, intersect the
// two boundary lines. psz may be shifted by the caller (base translation).
BoundaryCurve length_bound_curve(double psx, double psz, const StructuralParams& p,
                                 Ci1LengthBound which, BoundaryKind kind,
                                 const WorkspaceOptions& opt) {
    BoundaryCurve c;
    c.kind = kind;
    c.driving_param = SweepParam::theta2;
    const SweepRange sweep{kThetaEps, p.theta2_max, opt.n_sweep};
    double prev_l1 = std::numeric_limits<double>::quiet_NaN();
    double prev_th2 = 0.0;
    for (int i = 0; i < sweep.n; ++i) {
        const double th2 = sweep.at(i);
        double l1;
        if (!l1_from_position(psx, psz, p, th2, l1)) continue;
        if (which == Ci1LengthBound::r_min && std::isfinite(prev_l1) && prev_l1 * l1 < 0.0) {
            // the L1 = 0 dot: single direction where the first segment vanishes
            double a = prev_th2, b = th2;
            for (int k = 0; k < 60; ++k) {
                const double m = 0.5 * (a + b);
                double lm;
                if (!l1_from_position(psx, psz, p, m, lm)) break;
                if ((lm < 0.0) == (prev_l1 < 0.0)) a = m;
                else b = m;
            }
            const double thz = 0.5 * (a + b);
            double l1z;
            if (l1_from_position(psx, psz, p, thz, l1z)) {
                const double l2 = p.L20 * vl_ratio(thz);
                const double L1r2 = std::max(l1z, 0.0) + p.Lr + l2;
                const double L2g = l2 + p.Lg;
                const double z = (psz - L1r2) / L2g;
                const double x = (L1r2 * std::cos(thz) + L2g - psz * z) / psx;
                if (in_disk(x, z)) c.points.push_back({thz, x, z});
            }
        }
        prev_l1 = l1;
        prev_th2 = th2;
        if (l1 < 0.0) continue;
        double th1;
        if (which == Ci1LengthBound::r_min) {
            th1 = 2.0 * std::atan(l1 / p.r1_min);
            if (p.r1_min * th1 > p.L10 + kLimitTol) continue;
        } else {
            if (l1 < 0.5 * p.L10 - 1e-12) continue;
            th1 = virtual_length_inverse(std::max(l1, 0.5 * p.L10), p.L10);
            if (p.L10 < p.r1_min * th1 - kLimitTol) continue;
        }
        if (th1 > p.theta1_max + kLimitTol || th1 >= M_PI - kThetaEps) continue;
        double x, z;
        if (!intersect(line21(psx, psz, p, th2), line27(psx, psz, p, l1, th1), x, z)) continue;
        if (!in_disk(x, z)) continue;
        c.points.push_back({th2, x, z});
    }
    return c;
}

}  // namespace

BoundaryCurve ci1_boundary_34(const SymmetryFrame& f, const StructuralParams& p,
                              Ci1LengthBound which, const WorkspaceOptions& opt) {
    return length_bound_curve(f.p_s.x(), f.p_s.z(), p, which,
                              which == Ci1LengthBound::r_min ? BoundaryKind::TypeI_3
                                                             : BoundaryKind::TypeI_4,
                              opt);
}

BoundaryCurve ci1_type2_envelope(const SymmetryFrame& f, const StructuralParams& p,
                                 const WorkspaceOptions& opt) {
    BoundaryCurve c;
    c.kind = BoundaryKind::TypeII;
    c.driving_param = SweepParam::theta2;
    const double psx = f.p_s.x(), psz = f.p_s.z();
    const SweepRange sweep{kThetaEps, p.theta2_max, opt.n_sweep};
    for (int i = 0; i < sweep.n; ++i) {
        const double th2 = sweep.at(i);
        double x, z;
        if (!intersect(line21(psx, psz, p, th2), line21_deriv(psx, psz, p, th2), x, z)) continue;
        if (!in_disk(x, z)) continue;
        // realizability: the envelope point must come from an admissible shape
        double l1;
        if (!l1_from_position(psx, psz, p, th2, l1) || l1 < 0.0) continue;
        const double l2 = p.L20 * vl_ratio(th2);
        const double L1r2 = l1 + p.Lr + l2;
        const double L2g = l2 + p.Lg;
        const double c1 = (psz - l1 - L2g * z) / L1r2;
        if (std::abs(c1) > 1.0 + 1e-9) continue;
        const double th1 = std::acos(std::clamp(c1, -1.0, 1.0));
        if (th1 > p.theta1_max + kLimitTol) continue;
        const double L1 = l1 / vl_ratio(std::min(th1, M_PI - 1e-12));
        if (L1 < p.r1_min * th1 - kLimitTol || L1 > p.L10 + kLimitTol) continue;
        c.points.push_back({th2, x, z});
    }
    return c;
}

std::pair<BoundaryCurve, BoundaryCurve> ci2_boundaries_12(const SymmetryFrame& f,
                                                          const StructuralParams& p,
                                                          const WorkspaceOptions& opt) {
    BoundaryCurve b1, b2;
    b1.kind = BoundaryKind::TypeI_1;
    b1.driving_param = SweepParam::theta2;
    b2.kind = BoundaryKind::TypeI_2;
    b2.driving_param = SweepParam::theta1;

    auto fill = [&](BoundaryCurve& c, bool fix_theta1) {
        const SweepRange sweep{0.0, fix_theta1 ? p.theta2_max : p.theta1_max, opt.n_sweep};
        std::array<DirectionSample, 2> s;
        for (int root = 0; root < 2; ++root) {
            for (int i = 0; i < sweep.n; ++i) {
                const double t = sweep.at(i);
                const double th1 = fix_theta1 ? p.theta1_max : t;
                const double th2 = fix_theta1 ? t : p.theta2_max;
                const int mask = ci2_directions(f, p, th1, th2, s);
                if (!((mask >> root) & 1)) continue;
                const DirectionSample& d = s[root];
                if (d.length_var < -kLimitTol || d.length_var > p.Ls_max + kLimitTol) continue;
                if (!in_disk(d.a_sx, d.a_sz)) continue;
                c.points.push_back({t, d.a_sx, d.a_sz});
            }
        }
    };
    fill(b1, true);
    fill(b2, false);
    return {b1, b2};
}

std::pair<BoundaryCurve, BoundaryCurve> ci2_boundaries_34(const SymmetryFrame& f,
                                                          const StructuralParams& p,
                                                          const WorkspaceOptions& opt) {
    // Ls = 0 matches the full-insertion bound of the variable-length class;
    // Ls = Ls_max is the same curve with the position shifted down the axis.
    BoundaryCurve b3 = length_bound_curve(f.p_s.x(), f.p_s.z(), p, Ci1LengthBound::L_max,
                                          BoundaryKind::TypeI_3, opt);
    BoundaryCurve b4 = length_bound_curve(f.p_s.x(), f.p_s.z() - p.Ls_max, p,
                                          Ci1LengthBound::L_max, BoundaryKind::TypeI_4, opt);
    return {b3, b4};
}

// ---------------------------------------------------------------------------
// CI-2 type-II envelope: zero set of the parameter-to-direction Jacobian
// ---------------------------------------------------------------------------

namespace {

// Determinant surrogate D = G_t2 F_t1 - G_t1 F_t2 for one a_sz root, where
// F is the quadratic fixing a_sz and G the numerator of a_sx.
bool ci2_fold_det(const SymmetryFrame& f, const StructuralParams& p, double th1, double th2,
                  int root, double& D, DirectionSample& sample) {
    std::array<DirectionSample, 2> s;
    const int mask = ci2_directions(f, p, th1, th2, s);
    if (!((mask >> root) & 1)) return false;
    sample = s[root];
    const double a = sample.a_sz;
    const double psx = f.p_s.x();
    const double l1 = p.L10 * vl_ratio(th1);
    const double l2 = p.L20 * vl_ratio(th2);
    const double dl1 = p.L10 * vl_ratio_deriv(th1);
    const double dl2 = p.L20 * vl_ratio_deriv(th2);
    const double L1r2 = l1 + p.Lr + l2;
    const double L2g = l2 + p.Lg;
    const double c1 = std::cos(th1), s1 = std::sin(th1);
    const double c2 = std::cos(th2), s2 = std::sin(th2);

    const double Ft1 = 2.0 * L2g * (dl1 * c1 - L1r2 * s1) * a +
                       2.0 * L1r2 * dl1 * (c1 * c1 - 1.0) - 2.0 * L1r2 * L1r2 * c1 * s1 -
                       2.0 * L2g * dl1 * c2;
    const double Ft2 = 2.0 * L2g * dl2 * a * a + 2.0 * dl2 * (L1r2 + L2g) * c1 * a +
                       2.0 * L1r2 * dl2 * (c1 * c1 - 1.0) - 2.0 * L2g * dl2 -
                       2.0 * dl2 * (L1r2 + L2g) * c2 + 2.0 * L2g * L1r2 * s2;
    const double Gt1 = -(dl1 * c1 - L1r2 * s1) * a + dl1 * c2;
    const double Gt2 = dl2 * (1.0 + c2 - a * a - c1 * a) - L1r2 * s2;
    D = (Gt2 * Ft1 - Gt1 * Ft2) / (psx * psx + 1.0);  // scale only
    return true;
}

}  // namespace

BoundaryCurve ci2_type2_envelope(const SymmetryFrame& f, const StructuralParams& p,
                                 const WorkspaceOptions& opt) {
    BoundaryCurve c;
    c.kind = BoundaryKind::TypeII;
    c.driving_param = SweepParam::theta1;
    const int n = std::max(opt.grid_n, 32);
    auto th1_of = [&](int i) { return kThetaEps + (p.theta1_max - 2 * kThetaEps) * i / (n - 1); };
    auto th2_of = [&](int j) { return kThetaEps + (p.theta2_max - 2 * kThetaEps) * j / (n - 1); };

    for (int root = 0; root < 2; ++root) {
        std::vector<double> D(n * n, std::numeric_limits<double>::quiet_NaN());
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                double d;
                DirectionSample s;
                if (ci2_fold_det(f, p, th1_of(i), th2_of(j), root, d, s)) D[i * n + j] = d;
            }
        }
        auto emit = [&](double th1, double th2) {
            DirectionSample s;
            double d;
            if (!ci2_fold_det(f, p, th1, th2, root, d, s)) return;
            if (s.length_var < -kLimitTol || s.length_var > p.Ls_max + kLimitTol) return;
            if (!in_disk(s.a_sx, s.a_sz)) return;
            c.points.push_back({th1, s.a_sx, s.a_sz});
        };
        auto refine = [&](double a1, double a2, double b1, double b2, double fa) {
            // bisect along the grid edge (a1,a2)-(b1,b2)
            for (int k = 0; k < 50; ++k) {
                const double m1 = 0.5 * (a1 + b1), m2 = 0.5 * (a2 + b2);
                double d;
                DirectionSample s;
                if (!ci2_fold_det(f, p, m1, m2, root, d, s)) return;
                if (fa * d <= 0.0) {
                    b1 = m1;
                    b2 = m2;
                } else {
                    a1 = m1;
                    a2 = m2;
                    fa = d;
                }
            }
            emit(0.5 * (a1 + b1), 0.5 * (a2 + b2));
        };
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const double d0 = D[i * n + j];
                if (!std::isfinite(d0)) continue;
                if (i + 1 < n && std::isfinite(D[(i + 1) * n + j]) &&
                    d0 * D[(i + 1) * n + j] < 0.0) {
                    refine(th1_of(i), th2_of(j), th1_of(i + 1), th2_of(j), d0);
                }
                if (j + 1 < n && std::isfinite(D[i * n + j + 1]) &&
                    d0 * D[i * n + j + 1] < 0.0) {
                    refine(th1_of(i), th2_of(j), th1_of(i), th2_of(j + 1), d0);
                }
            }
        }
    }
    std::sort(c.points.begin(), c.points.end(), [](const BoundaryPoint& a, const BoundaryPoint& b) {
        if (a.sweep_value != b.sweep_value) return a.sweep_value < b.sweep_value;
        return a.a_sz < b.a_sz;
    });
    return c;
}

// ---------------------------------------------------------------------------
// Membership region
// ---------------------------------------------------------------------------

void RegionIndex::finalize() {
    bin_ids.assign(bins * bins, {});
    const double lo = -1.0 - 1e-6, span = 2.0 + 2e-6;
    for (int q = 0; q < static_cast<int>(quads.size()); ++q) {
        double xmin = 1e9, xmax = -1e9, zmin = 1e9, zmax = -1e9;
        for (int k = 0; k < 4; ++k) {
            xmin = std::min(xmin, quads[q].xy[2 * k]);
            xmax = std::max(xmax, quads[q].xy[2 * k]);
            zmin = std::min(zmin, quads[q].xy[2 * k + 1]);
            zmax = std::max(zmax, quads[q].xy[2 * k + 1]);
        }
        const int i0 = std::clamp(static_cast<int>((xmin - lo) / span * bins), 0, bins - 1);
        const int i1 = std::clamp(static_cast<int>((xmax - lo) / span * bins), 0, bins - 1);
        const int j0 = std::clamp(static_cast<int>((zmin - lo) / span * bins), 0, bins - 1);
        const int j1 = std::clamp(static_cast<int>((zmax - lo) / span * bins), 0, bins - 1);
        for (int i = i0; i <= i1; ++i) {
            for (int j = j0; j <= j1; ++j) bin_ids[i * bins + j].push_back(q);
        }
    }
}

bool RegionIndex::contains(double x, double z) const {
    if (bin_ids.empty()) return false;
    const double lo = -1.0 - 1e-6, span = 2.0 + 2e-6;
    const int i = std::clamp(static_cast<int>((x - lo) / span * bins), 0, bins - 1);
    const int j = std::clamp(static_cast<int>((z - lo) / span * bins), 0, bins - 1);
    for (const int q : bin_ids[i * bins + j]) {
        const auto& v = quads[q].xy;
        bool inside = false;
        for (int a = 0, b = 3; a < 4; b = a++) {
            const double xa = v[2 * a], za = v[2 * a + 1];
            const double xb = v[2 * b], zb = v[2 * b + 1];
            if ((za > z) != (zb > z)) {
                const double xi = xa + (z - za) / (zb - za) * (xb - xa);
                if (x < xi) inside = !inside;
            }
        }
        if (inside) return true;
    }
    return false;
}

namespace {

struct CornerSample {
    bool ok = false;
    double x = 0.0, z = 0.0;
    double den_sign = 0.0;  // CI-1 l1 pole guard
};

// One corner of a parameter cell: does (th1, th2) map to an (admissible)
// direction, and where.
CornerSample region_corner(const SymmetryFrame& f, const StructuralParams& p, ConfigClass cls,
                           int root, double th1, double th2, bool limited) {
    CornerSample out;
    if (cls == ConfigClass::CI1) {
        const double l2 = p.L20 * vl_ratio(th2);
        const double den = (l2 + p.Lg) * std::cos(th2) + p.Lr + l2 + f.p_s.z();
        out.den_sign = den >= 0.0 ? 1.0 : -1.0;
        auto s = ci1_direction(f, p, th1, th2);
        if (!s) return out;
        if (limited && !ci1_admissible(*s, p)) return out;
        out.ok = true;
        out.x = s->a_sx;
        out.z = s->a_sz;
        return out;
    }
    std::array<DirectionSample, 2> s;
    const int mask = ci2_directions(f, p, th1, th2, s);
    out.den_sign = 1.0;
    if (!((mask >> root) & 1)) return out;
    if (limited &&
        (s[root].length_var < -kLimitTol || s[root].length_var > p.Ls_max + kLimitTol)) {
        return out;
    }
    out.ok = true;
    out.x = s[root].a_sx;
    out.z = s[root].a_sz;
    return out;
}

void add_region_cells(RegionIndex& R, const SymmetryFrame& f, const StructuralParams& p,
                      ConfigClass cls, int root, bool limited, double t1a, double t1b, double t2a,
                      double t2b, int depth) {
    const CornerSample c00 = region_corner(f, p, cls, root, t1a, t2a, limited);
    const CornerSample c10 = region_corner(f, p, cls, root, t1b, t2a, limited);
    const CornerSample c01 = region_corner(f, p, cls, root, t1a, t2b, limited);
    const CornerSample c11 = region_corner(f, p, cls, root, t1b, t2b, limited);
    const int nok = c00.ok + c10.ok + c01.ok + c11.ok;
    const bool pole_mixed = cls == ConfigClass::CI1 &&
                            (c00.den_sign != c10.den_sign || c00.den_sign != c01.den_sign ||
                             c00.den_sign != c11.den_sign);
    if (nok == 4 && !pole_mixed) {
        RegionIndex::Quad q;
        q.xy = {c00.x, c00.z, c10.x, c10.z, c11.x, c11.z, c01.x, c01.z};
        R.quads.push_back(q);
        return;
    }
    if (nok == 0 && !pole_mixed) return;
    if (depth <= 0) return;
    const double m1 = 0.5 * (t1a + t1b), m2 = 0.5 * (t2a + t2b);
    add_region_cells(R, f, p, cls, root, limited, t1a, m1, t2a, m2, depth - 1);
    add_region_cells(R, f, p, cls, root, limited, m1, t1b, t2a, m2, depth - 1);
    add_region_cells(R, f, p, cls, root, limited, t1a, m1, m2, t2b, depth - 1);
    add_region_cells(R, f, p, cls, root, limited, m1, t1b, m2, t2b, depth - 1);
}

RegionIndex build_region(const SymmetryFrame& f, const StructuralParams& p, ConfigClass cls,
                         bool limited, const WorkspaceOptions& opt) {
    RegionIndex R;
    const double t1_hi = limited ? p.theta1_max : M_PI - kThetaEps;
    const double t2_hi = limited ? p.theta2_max : M_PI - kThetaEps;
    const int n = opt.grid_n;
    const int nroots = cls == ConfigClass::CI1 ? 1 : 2;
    for (int root = 0; root < nroots; ++root) {
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                add_region_cells(R, f, p, cls, root, limited, t1_hi * i / n, t1_hi * (i + 1) / n,
                                 t2_hi * j / n, t2_hi * (j + 1) / n, 2);
            }
        }
    }
    R.finalize();
    return R;
}

// ---------------------------------------------------------------------------
// On-axis case: 1-D feasibility in a_sz
// ---------------------------------------------------------------------------

struct AxisScan {
    std::vector<std::array<double, 2>> intervals;
    bool contains(double asz) const {
        for (const auto& iv : intervals) {
            if (asz >= iv[0] && asz <= iv[1]) return true;
        }
        return false;
    }
};

// collect feasible a_sz samples into merged intervals
AxisScan axis_intervals(const SymmetryFrame& f, const StructuralParams& p, ConfigClass cls,
                        bool limited, const WorkspaceOptions& opt) {
    const double Z = f.p_s.z();
    const int n = std::max(opt.grid_n * 2, 256);
    const double t1_hi = limited ? p.theta1_max : M_PI - kThetaEps;
    const double t2_hi = limited ? p.theta2_max : M_PI - kThetaEps;
    std::vector<double> samples;
    auto mark = [&](double az) {
        if (az < -1.0 - 1e-9 || az > 1.0 + 1e-9) return;
        samples.push_back(std::clamp(az, -1.0, 1.0));
    };
    if (cls == ConfigClass::CI1) {
        for (int j = 0; j < n; ++j) {
            const double th2 = kThetaEps + (t2_hi - kThetaEps) * j / (n - 1);
            double l1;
            if (!l1_from_position(0.0, Z, p, th2, l1) || l1 < 0.0) continue;
            const double l2 = p.L20 * vl_ratio(th2);
            const double L1r2 = l1 + p.Lr + l2;
            const double L2g = l2 + p.Lg;
            if (std::abs(Z - l1) < 1e-12) continue;
            const double az = (L1r2 * std::cos(th2) + L2g) / (Z - l1);
            if (std::abs(az) > 1.0 + 1e-9) continue;
            const double c1 = (Z - l1 - L2g * std::clamp(az, -1.0, 1.0)) / L1r2;
            if (std::abs(c1) > 1.0 + 1e-9) continue;
            const double th1 = std::acos(std::clamp(c1, -1.0, 1.0));
            if (limited) {
                if (th1 > p.theta1_max + kLimitTol) continue;
                const double L1 = l1 / vl_ratio(std::min(th1, M_PI - 1e-12));
                if (L1 < p.r1_min * th1 - kLimitTol || L1 > p.L10 + kLimitTol) continue;
            }
            mark(az);
        }
    } else {
        // On axis the direction family is one-dimensional: the chain closure
        // ties theta1 to theta2 through c1 * D = +-(L1r2 + L2g c2), with D
        // the base-to-tip distance of the bent part. Extract the zero set and
        // mark the a_z it reaches.
        for (const double sgn : {1.0, -1.0}) {
            // closure: the transverse extents of the two chain legs must
            // match, az^2 = 1 - (L1r2 sin(th1)/L2g)^2, and the bending-angle
            // quadratic must hold at that az
            auto closure = [&](double th1, double th2, double& az, double& Ls) {
                const double l1 = p.L10 * vl_ratio(th1);
                const double l2 = p.L20 * vl_ratio(th2);
                const double L1r2 = l1 + p.Lr + l2;
                const double L2g = l2 + p.Lg;
                const double c1 = std::cos(th1), c2 = std::cos(th2);
                const double s1 = std::sin(th1);
                const double t = L1r2 * s1 / L2g;
                if (t > 1.0) {
                    az = 2.0;
                    Ls = -1.0;
                    return std::numeric_limits<double>::quiet_NaN();
                }
                az = sgn * std::sqrt(std::max(0.0, 1.0 - t * t));
                Ls = Z - (L1r2 * c1 + L2g * az) - l1;
                return sgn * c1 * std::sqrt(std::max(0.0, 1.0 - t * t)) - c2 -
                       L1r2 * s1 * s1 / L2g;
            };
            auto admit = [&](double th1, double th2) {
                double az, Ls;
                closure(th1, th2, az, Ls);
                if (std::abs(az) > 1.0 + 1e-9) return;
                if (limited && (Ls < -kLimitTol || Ls > p.Ls_max + kLimitTol)) return;
                mark(az);
            };
            for (int i = 0; i < n; ++i) {
                const double th1 = kThetaEps + (t1_hi - kThetaEps) * i / (n - 1);
                double prev = 0.0, prev_th2 = 0.0;
                bool have_prev = false;
                for (int j = 0; j < n; ++j) {
                    const double th2 = kThetaEps + (t2_hi - kThetaEps) * j / (n - 1);
                    double az, Ls;
                    const double h = closure(th1, th2, az, Ls);
                    if (have_prev && std::isfinite(h) && std::isfinite(prev) &&
                        prev * h <= 0.0) {
                        double a = prev_th2, b = th2, fa = prev;
                        for (int k = 0; k < 50; ++k) {
                            const double m = 0.5 * (a + b);
                            double azm, lsm;
                            const double fm = closure(th1, m, azm, lsm);
                            if (!std::isfinite(fm)) break;
                            if (fa * fm <= 0.0) b = m;
                            else { a = m; fa = fm; }
                        }
                        admit(th1, 0.5 * (a + b));
                    }
                    have_prev = true;
                    prev = h;
                    prev_th2 = th2;
                }
            }
            // crossings along theta1 as well, for curve segments parallel to
            // the theta2 axis
            for (int j = 0; j < n; ++j) {
                const double th2 = kThetaEps + (t2_hi - kThetaEps) * j / (n - 1);
                double prev = 0.0, prev_th1 = 0.0;
                bool have_prev = false;
                for (int i = 0; i < n; ++i) {
                    const double th1 = kThetaEps + (t1_hi - kThetaEps) * i / (n - 1);
                    double az, Ls;
                    const double h = closure(th1, th2, az, Ls);
                    if (have_prev && std::isfinite(h) && std::isfinite(prev) &&
                        prev * h <= 0.0) {
                        double a = prev_th1, b = th1, fa = prev;
                        for (int k = 0; k < 50; ++k) {
                            const double m = 0.5 * (a + b);
                            double azm, lsm;
                            const double fm = closure(m, th2, azm, lsm);
                            if (!std::isfinite(fm)) break;
                            if (fa * fm <= 0.0) b = m;
                            else { a = m; fa = fm; }
                        }
                        admit(0.5 * (a + b), th2);
                    }
                    have_prev = true;
                    prev = h;
                    prev_th1 = th1;
                }
            }
        }
    }
    AxisScan out;
    if (samples.empty()) return out;
    std::sort(samples.begin(), samples.end());
    // the feasible set is a union of arcs sampled pointwise: merge runs,
    // keeping genuine gaps
    const double pad = 2e-3, gap = 1e-2;
    double lo = samples.front() - pad, hi = samples.front() + pad;
    for (const double v : samples) {
        if (v - hi > gap) {
            out.intervals.push_back({lo, std::min(hi, 1.0)});
            lo = v - pad;
        }
        hi = v + pad;
    }
    out.intervals.push_back({std::max(lo, -1.0), std::min(hi, 1.0)});
    return out;
}

// boundary circles of the on-axis case: interval endpoints as horizontal
// chords of the disk
std::vector<BoundaryCurve> axis_curves(const AxisScan& scan) {
    std::vector<BoundaryCurve> out;
    BoundaryCurve c;
    c.kind = BoundaryKind::TypeI_1;
    c.driving_param = SweepParam::theta2;
    for (const auto& iv : scan.intervals) {
        for (const double az : {iv[0], iv[1]}) {
            const double r = std::sqrt(std::max(0.0, 1.0 - az * az));
            for (int k = 0; k < 65; ++k) {
                const double t = -1.0 + 2.0 * k / 64.0;
                c.points.push_back({az, t * r, az});
            }
        }
    }
    out.push_back(std::move(c));
    return out;
}

// ---------------------------------------------------------------------------
// Raster: region polygons and connectivity
// ---------------------------------------------------------------------------

struct Raster {
    int n;
    std::vector<char> in;
    double at(int i) const { return -1.0 + 2.0 * (i + 0.5) / n; }
};

Raster rasterize(const BoundarySet& set, int n) {
    Raster r{n, std::vector<char>(n * n, 0)};
    for (int i = 0; i < n; ++i) {
        const double x = r.at(i);
        for (int j = 0; j < n; ++j) {
            const double z = r.at(j);
            if (x * x + z * z > 1.0) continue;
            bool inside;
            if (set.on_axis) {
                AxisScan s;
                s.intervals = set.asz_intervals;
                inside = s.contains(z);
            } else {
                inside = set.region.contains(x, z);
            }
            r.in[i * n + j] = inside ? 1 : 0;
        }
    }
    return r;
}

// close 1-cell gaps so thin slivers do not bead into false components
Raster closed_copy(const Raster& r) {
    Raster d{r.n, std::vector<char>(r.n * r.n, 0)};
    auto at = [&](const std::vector<char>& g, int i, int j) -> char {
        if (i < 0 || j < 0 || i >= r.n || j >= r.n) return 0;
        return g[i * r.n + j];
    };
    for (int i = 0; i < r.n; ++i) {
        for (int j = 0; j < r.n; ++j) {
            char v = 0;
            for (int di = -1; di <= 1 && !v; ++di) {
                for (int dj = -1; dj <= 1 && !v; ++dj) v = at(r.in, i + di, j + dj);
            }
            d.in[i * r.n + j] = v;
        }
    }
    Raster e{r.n, std::vector<char>(r.n * r.n, 0)};
    for (int i = 0; i < r.n; ++i) {
        for (int j = 0; j < r.n; ++j) {
            char v = 1;
            for (int di = -1; di <= 1 && v; ++di) {
                for (int dj = -1; dj <= 1 && v; ++dj) v = at(d.in, i + di, j + dj);
            }
            // keep original cells even if erosion removes them
            e.in[i * r.n + j] = v | r.in[i * r.n + j];
        }
    }
    return e;
}

int count_components(const Raster& r, int min_cells = 1) {
    std::vector<char> seen(r.n * r.n, 0);
    std::vector<int> stack;
    int comps = 0;
    for (int s = 0; s < r.n * r.n; ++s) {
        if (!r.in[s] || seen[s]) continue;
        int cells = 0;
        stack.push_back(s);
        seen[s] = 1;
        while (!stack.empty()) {
            const int c = stack.back();
            stack.pop_back();
            ++cells;
            const int i = c / r.n, j = c % r.n;
            const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
            for (int k = 0; k < 4; ++k) {
                const int ni = i + di[k], nj = j + dj[k];
                if (ni < 0 || nj < 0 || ni >= r.n || nj >= r.n) continue;
                const int nc = ni * r.n + nj;
                if (r.in[nc] && !seen[nc]) {
                    seen[nc] = 1;
                    stack.push_back(nc);
                }
            }
        }
        if (cells >= min_cells) ++comps;
    }
    return comps;
}

std::vector<std::vector<std::array<double, 2>>> extract_polygons(const Raster& r) {
    // oriented boundary edges between inside and outside cells, chained into
    // closed loops; vertices on the raster lattice
    std::map<std::pair<int, int>, std::pair<int, int>> next;  // vertex -> vertex
    auto cell = [&](int i, int j) -> bool {
        if (i < 0 || j < 0 || i >= r.n || j >= r.n) return false;
        return r.in[i * r.n + j] != 0;
    };
    for (int i = 0; i < r.n; ++i) {
        for (int j = 0; j < r.n; ++j) {
            if (!cell(i, j)) continue;
            // edges with inside on the left, lattice coords (i, j)..(i+1, j+1)
            if (!cell(i, j - 1)) next[{i, j}] = {i + 1, j};          // bottom, +x
            if (!cell(i + 1, j)) next[{i + 1, j}] = {i + 1, j + 1};  // right, +z
            if (!cell(i, j + 1)) next[{i + 1, j + 1}] = {i, j + 1};  // top, -x
            if (!cell(i - 1, j)) next[{i, j + 1}] = {i, j};          // left, -z
        }
    }
    std::vector<std::vector<std::array<double, 2>>> polys;
    while (!next.empty()) {
        auto it = next.begin();
        std::pair<int, int> start = it->first, cur = start;
        std::vector<std::array<double, 2>> loop;
        while (true) {
            auto found = next.find(cur);
            if (found == next.end()) break;
            const auto nxt = found->second;
            next.erase(found);
            loop.push_back({-1.0 + 2.0 * cur.first / r.n, -1.0 + 2.0 * cur.second / r.n});
            cur = nxt;
            if (cur == start) break;
        }
        if (loop.size() >= 8) polys.push_back(std::move(loop));
    }
    return polys;
}

}  // namespace

// ---------------------------------------------------------------------------
// BoundarySet assembly and queries
// ---------------------------------------------------------------------------

BoundarySet build_boundary_set(const Vec3& position, const StructuralParams& p, ConfigClass cls,
                               const WorkspaceOptions& opt) {
    BoundarySet set;
    set.config_class = cls;
    set.position = position;
    const SymmetryFrame f = symmetry_frame_at(position);
    set.on_axis = f.on_axis;

    if (f.on_axis) {
        const AxisScan limited = axis_intervals(f, p, cls, true, opt);
        set.asz_intervals = limited.intervals;
        const AxisScan unlimited = axis_intervals(f, p, cls, false, opt);
        set.curves = axis_curves(limited);
        // reuse interval data for the unlimited side via the raster below
        set.axis_unlimited = unlimited.intervals;
        const Raster r = closed_copy(rasterize(set, opt.raster_n));
        set.disconnected = count_components(r, 8) > 1;
        set.region_polygons = extract_polygons(r);
        return set;
    }

    if (cls == ConfigClass::CI1) {
        set.curves.push_back(ci1_boundary_1(f, p, opt));
        set.curves.push_back(ci1_boundary_2(f, p, opt));
        set.curves.push_back(ci1_boundary_34(f, p, Ci1LengthBound::r_min, opt));
        set.curves.push_back(ci1_boundary_34(f, p, Ci1LengthBound::L_max, opt));
        set.curves.push_back(ci1_type2_envelope(f, p, opt));
    } else {
        auto [b1, b2] = ci2_boundaries_12(f, p, opt);
        auto [b3, b4] = ci2_boundaries_34(f, p, opt);
        set.curves.push_back(std::move(b1));
        set.curves.push_back(std::move(b2));
        set.curves.push_back(std::move(b3));
        set.curves.push_back(std::move(b4));
        set.curves.push_back(ci2_type2_envelope(f, p, opt));
    }
    set.region = build_region(f, p, cls, true, opt);
    set.region_unlimited = build_region(f, p, cls, false, opt);
    const Raster r = closed_copy(rasterize(set, opt.raster_n));
    set.disconnected = count_components(r, 8) > 1;
    set.region_polygons = extract_polygons(r);
    return set;
}

BoundarySet::Side BoundarySet::classify(const Vec3& a_s) const {
    const double x = a_s.x(), z = a_s.z();
    if (on_axis) {
        AxisScan lim;
        lim.intervals = asz_intervals;
        if (lim.contains(z)) return Side::Feasible;
        AxisScan unlim;
        unlim.intervals = axis_unlimited;
        return unlim.contains(z) ? Side::InfeasibleTypeI : Side::InfeasibleTypeII;
    }
    if (region.contains(x, z)) return Side::Feasible;
    return region_unlimited.contains(x, z) ? Side::InfeasibleTypeI : Side::InfeasibleTypeII;
}

double BoundarySet::min_boundary_distance(double a_sx, double a_sz) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : curves) {
        const auto& pts = c.points;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const double dx = pts[i].a_sx - a_sx, dz = pts[i].a_sz - a_sz;
            best = std::min(best, std::hypot(dx, dz));
            if (i + 1 < pts.size()) {
                // segment only between neighbouring sweep samples
                const double gap = std::abs(pts[i + 1].sweep_value - pts[i].sweep_value);
                if (gap > 0.1) continue;
                const double ex = pts[i + 1].a_sx - pts[i].a_sx;
                const double ez = pts[i + 1].a_sz - pts[i].a_sz;
                const double len2 = ex * ex + ez * ez;
                if (len2 < 1e-30) continue;
                const double t =
                    std::clamp(((a_sx - pts[i].a_sx) * ex + (a_sz - pts[i].a_sz) * ez) / len2,
                               0.0, 1.0);
                best = std::min(best, std::hypot(pts[i].a_sx + t * ex - a_sx,
                                                 pts[i].a_sz + t * ez - a_sz));
            }
        }
    }
    return best;
}

DirectionClass classify_direction(const Pose& target, const StructuralParams& params,
                                  ConfigClass cls, const SolverSettings& settings) {
    const IKOutcome o = solve(target, params, cls, settings);
    switch (o.status) {
        case SolveStatus::Solved: return DirectionClass::Feasible;
        case SolveStatus::InfeasibleOrientation: return DirectionClass::InfeasibleTypeI;
        default: return DirectionClass::InfeasibleTypeII;
    }
}

ClosestDirection closest_feasible_direction(const Pose& target, const StructuralParams& params,
                                            ConfigClass cls, int n_samples,
                                            const SolverSettings& settings) {
    const SymmetryFrame f = to_symmetry_frame(target);
    const Vec3 a_t = f.a_s;
    const DirectionClass dc = classify_direction(target, params, cls, settings);

    WorkspaceOptions opt;
    opt.n_sweep = n_samples;
    opt.grid_n = 72;  // envelope candidates get refined; a coarse grid is enough

    struct Cand {
        Vec3 dir;
        BoundaryKind kind;
        double angle;
    };
    std::vector<Cand> cands;
    const double ysign = a_t.y() >= 0.0 ? 1.0 : -1.0;
    auto push = [&](double asx, double asz, double ay_sq, BoundaryKind kind) {
        if (ay_sq < -kLiftTol) return;
        const Vec3 d(asx, ysign * std::sqrt(std::max(0.0, ay_sq)), asz);
        const double n = d.norm();
        if (n < 0.5) return;
        const Vec3 u = d / n;
        cands.push_back({u, kind, std::acos(std::clamp(u.dot(a_t), -1.0, 1.0))});
    };

    // Type-I candidates: boundary sweeps with the limits pulled slightly
    // inward so the returned direction is strictly feasible.
    const double eps = 1e-6;
    auto type1_candidates = [&]() {
        if (cls == ConfigClass::CI1) {
            for (int i = 0; i < n_samples; ++i) {
                const double th1 = (params.theta1_max - eps) * i / (n_samples - 1);
                if (auto s = ci1_direction(f, params, th1, params.theta2_max - eps)) {
                    if (ci1_admissible(*s, params)) push(s->a_sx, s->a_sz, s->ay_sq, BoundaryKind::TypeI_1);
                }
            }
            for (int i = 0; i < n_samples; ++i) {
                const double th2 = kThetaEps + (params.theta2_max - eps - kThetaEps) * i / (n_samples - 1);
                if (auto s = ci1_direction(f, params, params.theta1_max - eps, th2)) {
                    if (ci1_admissible(*s, params)) push(s->a_sx, s->a_sz, s->ay_sq, BoundaryKind::TypeI_2);
                }
                double l1;
                if (!l1_from_position(f.p_s.x(), f.p_s.z(), params, th2, l1) || l1 < 0.0) continue;
                // L1 at the bending-radius bound, perturbed into the feasible side
                const double th1_r = 2.0 * std::atan(l1 / (params.r1_min + eps));
                if (auto s = ci1_direction(f, params, th1_r, th2)) {
                    if (ci1_admissible(*s, params)) push(s->a_sx, s->a_sz, s->ay_sq, BoundaryKind::TypeI_3);
                }
                if (l1 >= 0.5 * (params.L10 - eps)) {
                    const double th1_m = virtual_length_inverse(l1, params.L10 - eps);
                    if (th1_m <= params.theta1_max) {
                        if (auto s = ci1_direction(f, params, th1_m, th2)) {
                            if (ci1_admissible(*s, params))
                                push(s->a_sx, s->a_sz, s->ay_sq, BoundaryKind::TypeI_4);
                        }
                    }
                }
            }
        } else {
            std::array<DirectionSample, 2> s;
            for (int i = 0; i < n_samples; ++i) {
                const double th2 = (params.theta2_max - eps) * i / (n_samples - 1);
                const int m1 = ci2_directions(f, params, params.theta1_max - eps, th2, s);
                for (int k = 0; k < 2; ++k) {
                    if (((m1 >> k) & 1) && s[k].length_var >= 0.0 &&
                        s[k].length_var <= params.Ls_max)
                        push(s[k].a_sx, s[k].a_sz, s[k].ay_sq, BoundaryKind::TypeI_1);
                }
                const double th1 = (params.theta1_max - eps) * i / (n_samples - 1);
                const int m2 = ci2_directions(f, params, th1, params.theta2_max - eps, s);
                for (int k = 0; k < 2; ++k) {
                    if (((m2 >> k) & 1) && s[k].length_var >= 0.0 &&
                        s[k].length_var <= params.Ls_max)
                        push(s[k].a_sx, s[k].a_sz, s[k].ay_sq, BoundaryKind::TypeI_2);
                }
            }
            // Ls bounds: level sets of the length variable over the grid
            const int g = 140;
            for (int i = 0; i <= g; ++i) {
                for (int j = 0; j <= g; ++j) {
                    const double th1 = (params.theta1_max - eps) * i / g;
                    const double th2 = (params.theta2_max - eps) * j / g;
                    const int mask = ci2_directions(f, params, th1, th2, s);
                    for (int k = 0; k < 2; ++k) {
                        if (!((mask >> k) & 1)) continue;
                        const double Ls = s[k].length_var;
                        if (Ls >= eps && Ls <= 0.02 * params.Ls_max)
                            push(s[k].a_sx, s[k].a_sz, s[k].ay_sq, BoundaryKind::TypeI_3);
                        if (Ls >= 0.98 * params.Ls_max && Ls <= params.Ls_max - eps)
                            push(s[k].a_sx, s[k].a_sz, s[k].ay_sq, BoundaryKind::TypeI_4);
                    }
                }
            }
        }
    };

    auto type2_candidates = [&]() {
        const BoundaryCurve env = cls == ConfigClass::CI1 ? ci1_type2_envelope(f, params, opt)
                                                          : ci2_type2_envelope(f, params, opt);
        for (const auto& pt : env.points) {
            push(pt.a_sx, pt.a_sz, 1.0 - pt.a_sx * pt.a_sx - pt.a_sz * pt.a_sz,
                 BoundaryKind::TypeII);
        }
    };

    // Both families always contribute: the nearest boundary point of a
    // type-II-infeasible direction can still lie on a type-I arc. The
    // classification decides only which family is searched first (and so
    // which label wins ties).
    if (dc == DirectionClass::InfeasibleTypeI) {
        type1_candidates();
        type2_candidates();
    } else {
        type2_candidates();
        type1_candidates();
    }
    // interior anchor as a last resort
    if (cands.empty()) {
        for (int i = 1; i < 40 && cands.empty(); ++i) {
            for (int j = 1; j < 40 && cands.empty(); ++j) {
                const double th1 = params.theta1_max * i / 40.0;
                const double th2 = params.theta2_max * j / 40.0;
                if (cls == ConfigClass::CI1) {
                    if (auto s = ci1_direction(f, params, th1, th2)) {
                        if (ci1_admissible(*s, params))
                            push(s->a_sx, s->a_sz, s->ay_sq, BoundaryKind::TypeI_1);
                    }
                } else {
                    std::array<DirectionSample, 2> s;
                    const int mask = ci2_directions(f, params, th1, th2, s);
                    for (int k = 0; k < 2; ++k) {
                        if (((mask >> k) & 1) && s[k].length_var >= 0.0 &&
                            s[k].length_var <= params.Ls_max)
                            push(s[k].a_sx, s[k].a_sz, s[k].ay_sq, BoundaryKind::TypeI_1);
                    }
                }
            }
        }
    }

    ClosestDirection out;
    if (cands.empty()) return out;  // no feasible directions at all
    const auto best = std::min_element(cands.begin(), cands.end(),
                                       [](const Cand& a, const Cand& b) { return a.angle < b.angle; });
    out.direction = rot_z(f.gamma) * best->dir;
    out.source = best->kind;
    out.angle = best->angle;
    return out;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

BoundaryKind kind_from_string(const std::string& s) {
    if (s == "type1_1") return BoundaryKind::TypeI_1;
    if (s == "type1_2") return BoundaryKind::TypeI_2;
    if (s == "type1_3") return BoundaryKind::TypeI_3;
    if (s == "type1_4") return BoundaryKind::TypeI_4;
    if (s == "type2") return BoundaryKind::TypeII;
    throw std::runtime_error("unknown boundary kind: " + s);
}

}  // namespace

void write_boundary_csv(const BoundarySet& set, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "kind,sweep_param_value,a_sx,a_sz\n";
    out.precision(17);
    for (const auto& c : set.curves) {
        for (const auto& pt : c.points) {
            out << to_string(c.kind) << ',' << pt.sweep_value << ',' << pt.a_sx << ','
                << pt.a_sz << '\n';
        }
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<BoundaryCurve> read_boundary_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::string line;
    std::getline(in, line);  // header
    std::vector<BoundaryCurve> curves;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string kind, sv, x, z;
        std::getline(ss, kind, ',');
        std::getline(ss, sv, ',');
        std::getline(ss, x, ',');
        std::getline(ss, z, ',');
        const BoundaryKind k = kind_from_string(kind);
        if (curves.empty() || curves.back().kind != k) {
            BoundaryCurve c;
            c.kind = k;
            curves.push_back(c);
        }
        curves.back().points.push_back({std::stod(sv), std::stod(x), std::stod(z)});
    }
    return curves;
}

void write_boundary_json(const BoundarySet& set, const std::string& path) {
    nlohmann::json j;
    j["config_class"] = set.config_class == ConfigClass::CI1 ? "ci1" : "ci2";
    j["position"] = {set.position.x(), set.position.y(), set.position.z()};
    j["on_axis"] = set.on_axis;
    j["disconnected"] = set.disconnected;
    j["asz_intervals"] = set.asz_intervals;
    j["axis_unlimited"] = set.axis_unlimited;
    nlohmann::json curves = nlohmann::json::array();
    for (const auto& c : set.curves) {
        nlohmann::json jc;
        jc["kind"] = to_string(c.kind);
        jc["driving_param"] = to_string(c.driving_param);
        nlohmann::json pts = nlohmann::json::array();
        for (const auto& pt : c.points) pts.push_back({pt.sweep_value, pt.a_sx, pt.a_sz});
        jc["points"] = std::move(pts);
        curves.push_back(std::move(jc));
    }
    j["curves"] = std::move(curves);
    j["region_polygons"] = set.region_polygons;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

BoundarySet read_boundary_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    nlohmann::json j;
    in >> j;
    BoundarySet set;
    set.config_class = j.at("config_class") == "ci1" ? ConfigClass::CI1 : ConfigClass::CI2;
    const auto& pos = j.at("position");
    set.position = Vec3(pos[0], pos[1], pos[2]);
    set.on_axis = j.at("on_axis");
    set.disconnected = j.at("disconnected");
    set.asz_intervals = j.at("asz_intervals").get<std::vector<std::array<double, 2>>>();
    set.axis_unlimited = j.at("axis_unlimited").get<std::vector<std::array<double, 2>>>();
    for (const auto& jc : j.at("curves")) {
        BoundaryCurve c;
        c.kind = kind_from_string(jc.at("kind"));
        c.driving_param = jc.at("driving_param") == "theta1" ? SweepParam::theta1
                                                             : SweepParam::theta2;
        for (const auto& pt : jc.at("points")) {
            c.points.push_back({pt[0], pt[1], pt[2]});
        }
        set.curves.push_back(std::move(c));
    }
    set.region_polygons =
        j.at("region_polygons").get<std::vector<std::vector<std::array<double, 2>>>>();
    return set;
}

bool same_boundary_data(const BoundarySet& a, const BoundarySet& b) {
    if (a.config_class != b.config_class || a.on_axis != b.on_axis ||
        a.disconnected != b.disconnected) {
        return false;
    }
    if ((a.position - b.position).norm() != 0.0) return false;
    if (a.curves.size() != b.curves.size()) return false;
    for (std::size_t i = 0; i < a.curves.size(); ++i) {
        const auto& ca = a.curves[i];
        const auto& cb = b.curves[i];
        if (ca.kind != cb.kind || ca.driving_param != cb.driving_param ||
            ca.points.size() != cb.points.size()) {
            return false;
        }
        for (std::size_t k = 0; k < ca.points.size(); ++k) {
            if (ca.points[k].sweep_value != cb.points[k].sweep_value ||
                ca.points[k].a_sx != cb.points[k].a_sx || ca.points[k].a_sz != cb.points[k].a_sz) {
                return false;
            }
        }
    }
    return a.asz_intervals == b.asz_intervals && a.axis_unlimited == b.axis_unlimited &&
           a.region_polygons == b.region_polygons;
}

}  // namespace ccik
