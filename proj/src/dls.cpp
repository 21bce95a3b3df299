#include "ccik/dls.hpp"

#include <cmath>
#include <stdexcept>

namespace ccik {

namespace {

using Vec6 = Eigen::Matrix<double, 6, 1>;

// Variable order: CI-1 (phi, theta1, L1, delta1, theta2, delta2),
//                 CI-2 (Ls, phi, theta1, delta1, theta2, delta2).
Vec6 to_vec(const Config& c) {
    Vec6 q;
    if (const auto* c1 = std::get_if<ConfigCI1>(&c)) {
        q << c1->phi, c1->theta1, c1->L1, c1->delta1, c1->theta2, c1->delta2;
    } else {
        const auto& c2 = std::get<ConfigCI2>(c);
        q << c2.Ls, c2.phi, c2.theta1, c2.delta1, c2.theta2, c2.delta2;
    }
    return q;
}

Config from_vec(ConfigClass cls, const Vec6& q) {
    if (cls == ConfigClass::CI1) {
        ConfigCI1 c;
        c.phi = q[0];
        c.theta1 = q[1];
        c.L1 = q[2];
        c.delta1 = q[3];
        c.theta2 = q[4];
        c.delta2 = q[5];
        return c;
    }
    ConfigCI2 c;
    c.Ls = q[0];
    c.phi = q[1];
    c.theta1 = q[2];
    c.delta1 = q[3];
    c.theta2 = q[4];
    c.delta2 = q[5];
    return c;
}

Vec6 clamp_box(ConfigClass cls, Vec6 q, const StructuralParams& p) {
    if (cls == ConfigClass::CI1) {
        q[1] = std::clamp(q[1], 0.0, p.theta1_max);
        q[2] = std::clamp(q[2], p.r1_min * q[1], p.L10);
        q[4] = std::clamp(q[4], 0.0, p.theta2_max);
    } else {
        q[0] = std::clamp(q[0], 0.0, p.Ls_max);
        q[2] = std::clamp(q[2], 0.0, p.theta1_max);
        q[4] = std::clamp(q[4], 0.0, p.theta2_max);
    }
    return q;
}

// Per-variable evaluation domain of the forward kinematics (wider than the
// configuration box; only theta >= 0, theta < pi and L1 >= 0 are hard).
void step_bounds(ConfigClass cls, int i, double qi, double h, double& lo, double& hi) {
    lo = qi - h;
    hi = qi + h;
    const bool is_theta = (cls == ConfigClass::CI1) ? (i == 1 || i == 4) : (i == 2 || i == 4);
    const bool is_len = (cls == ConfigClass::CI1) && i == 2;
    if (is_theta) {
        lo = std::max(lo, 0.0);
        hi = std::min(hi, M_PI - 1e-9);
    }
    if (is_len) lo = std::max(lo, 0.0);
}

Vec3 rotation_log(const Mat3& R) {
    const Eigen::AngleAxisd aa(R);
    return aa.angle() * aa.axis();
}

}  // namespace

void DlsSettings::validate() const {
    if (!(damping > 0.0 && max_iterations >= 1)) {
        throw std::invalid_argument("DlsSettings: damping > 0 and max_iterations >= 1 required");
    }
}

Eigen::Matrix<double, 6, 1> task_error(const Pose& target, const Pose& current) {
    Vec6 e;
    e.head<3>() = target.p - current.p;
    e.tail<3>() = rotation_log(target.R * current.R.transpose());
    return e;
}

Jacobian6 numerical_jacobian(const Config& config, const StructuralParams& params) {
    const ConfigClass cls = config_class_of(config);
    const Vec6 q0 = to_vec(config);
    const double h = 1e-6;
    Jacobian6 J;
    for (int i = 0; i < 6; ++i) {
        double lo, hi;
        step_bounds(cls, i, q0[i], h, lo, hi);
        Vec6 qp = q0, qm = q0;
        qp[i] = hi;
        qm[i] = lo;
        const Pose fp = forward_kinematics(params, from_vec(cls, qp));
        const Pose fm = forward_kinematics(params, from_vec(cls, qm));
        const double span = hi - lo;
        J.block<3, 1>(0, i) = (fp.p - fm.p) / span;
        J.block<3, 1>(3, i) = rotation_log(fp.R * fm.R.transpose()) / span;
    }
    return J;
}

Config dls_step(const Config& config, const Pose& target, const StructuralParams& params,
                const DlsSettings& settings, DlsPriority priority) {
    const ConfigClass cls = config_class_of(config);
    const Pose current = forward_kinematics(params, config);
    Vec6 e = task_error(target, current);
    Jacobian6 J = numerical_jacobian(config, params);
    if (priority == DlsPriority::position_first) {
        e.tail<3>() *= settings.ori_weight;
        J.bottomRows<3>() *= settings.ori_weight;
    }
    const double l2 = settings.damping * settings.damping;
    const Jacobian6 A = J * J.transpose() + l2 * Jacobian6::Identity();
    const Vec6 dq = J.transpose() * A.ldlt().solve(e);
    const Vec6 q = to_vec(config) + settings.step_scale * dq;
    return from_vec(cls, clamp_box(cls, q, params));
}

namespace {

// Bending-azimuth reseed: with theta at zero the delta column of the
// Jacobian vanishes and gradient steps cannot discover the bending plane,
// so a stalled iterate probes a ring of azimuths with a small test bend.
Config reseed_dead_azimuths(const Config& q, const Pose& target, const StructuralParams& params,
                            const DlsSettings& st, DlsPriority priority) {
    const ConfigClass cls = config_class_of(q);
    Config best = q;
    auto cost = [&](const Config& c) {
        Vec6 e = task_error(target, forward_kinematics(params, c));
        if (priority == DlsPriority::position_first) e.tail<3>() *= st.ori_weight;
        return e.norm();
    };
    double best_cost = cost(best);
    for (int seg = 0; seg < 2; ++seg) {
        Vec6 v = to_vec(best);
        const int i_theta = cls == ConfigClass::CI1 ? (seg == 0 ? 1 : 4) : (seg == 0 ? 2 : 4);
        const int i_delta = seg == 0 ? 3 : 5;
        if (v[i_theta] > 0.05) continue;
        Config cand_best = best;
        for (int k = 0; k < 16; ++k) {
            Vec6 w = v;
            w[i_theta] = 0.1;
            w[i_delta] = -M_PI + 2.0 * M_PI * k / 16.0;
            const Config cand = from_vec(cls, clamp_box(cls, w, params));
            const double c = cost(cand);
            if (c < best_cost) {
                best_cost = c;
                cand_best = cand;
            }
        }
        best = cand_best;
    }
    return best;
}

}  // namespace

IKOutcome solve_dls(const Pose& target, const StructuralParams& params, ConfigClass cls,
                    const DlsSettings& settings, DlsPriority priority) {
    Config q = cls == ConfigClass::CI1
                   ? Config(ConfigCI1{.phi = 0, .theta1 = 0, .L1 = 0.5 * params.L10,
                                      .delta1 = 0, .theta2 = 0, .delta2 = 0})
                   : Config(ConfigCI2{.Ls = 0.5 * params.Ls_max, .phi = 0, .theta1 = 0,
                                      .delta1 = 0, .theta2 = 0, .delta2 = 0});
    IKOutcome out;
    double best_ori = std::numeric_limits<double>::infinity();
    double best_err = std::numeric_limits<double>::infinity();
    int stagnation = 0;
    int no_improve = 0;
    for (int it = 0; it < settings.max_iterations; ++it) {
        const Pose fk = forward_kinematics(params, q);
        out.pos_err = (fk.p - target.p).norm();
        out.ori_err = orientation_angle(fk.R, target.R);
        out.iterations = it;
        if (out.pos_err < settings.pos_tol && out.ori_err < settings.ori_tol) {
            out.status = SolveStatus::Solved;
            out.config = q;
            return out;
        }
        if (priority == DlsPriority::position_first && out.pos_err < settings.pos_tol) {
            if (out.ori_err < best_ori) {
                best_ori = out.ori_err;
                stagnation = 0;
            } else if (++stagnation >= settings.stagnation_window) {
                break;
            }
        }
        const double err = out.pos_err + 10.0 * out.ori_err;
        if (err < best_err - 1e-9) {
            best_err = err;
            no_improve = 0;
        } else if (++no_improve >= 10) {
            q = reseed_dead_azimuths(q, target, params, settings, priority);
            no_improve = 0;
        }
        q = dls_step(q, target, params, settings, priority);
        out.iterations = it + 1;
    }
    // final error check after the last update
    const Pose fk = forward_kinematics(params, q);
    out.pos_err = (fk.p - target.p).norm();
    out.ori_err = orientation_angle(fk.R, target.R);
    if (out.pos_err < settings.pos_tol && out.ori_err < settings.ori_tol) {
        out.status = SolveStatus::Solved;
        out.config = q;
    } else {
        out.status = SolveStatus::NoConvergence;
    }
    return out;
}

}  // namespace ccik
