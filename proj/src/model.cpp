#include "ccik/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ccik {

void StructuralParams::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0)) {
            throw std::invalid_argument(std::string(name) + " must be > 0");
        }
    };
    positive(L10, "L10");
    positive(L20, "L20");
    positive(Lr, "Lr");
    positive(Lg, "Lg");
    positive(Ls_max, "Ls_max");
    positive(r1_min, "r1_min");
    if (!(theta1_max > 0.0 && theta1_max < M_PI)) {
        throw std::invalid_argument("theta1_max must lie in (0, pi)");
    }
    if (!(theta2_max > 0.0 && theta2_max < M_PI)) {
        throw std::invalid_argument("theta2_max must lie in (0, pi)");
    }
}

StructuralParams StructuralParams::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open params file: " + path);
    }
    StructuralParams p;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        for (auto& ch : line) {
            if (ch == '=') ch = ' ';
        }
        std::istringstream ss(line);
        std::string key;
        if (!(ss >> key)) continue;
        double value;
        if (!(ss >> value)) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": missing value for key '" + key + "'");
        }
        if (key == "L10") p.L10 = value;
        else if (key == "L20") p.L20 = value;
        else if (key == "Lr") p.Lr = value;
        else if (key == "Lg") p.Lg = value;
        else if (key == "Ls_max") p.Ls_max = value;
        else if (key == "theta1_max") p.theta1_max = value;
        else if (key == "theta2_max") p.theta2_max = value;
        else if (key == "r1_min") p.r1_min = value;
        else {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": unknown key '" + key + "'");
        }
    }
    p.validate();
    return p;
}

bool ConfigCI1::within_limits(const StructuralParams& p, double tol) const {
    if (theta1 < -tol || theta1 > p.theta1_max + tol) return false;
    if (theta2 < -tol || theta2 > p.theta2_max + tol) return false;
    if (L1 < p.r1_min * theta1 - tol || L1 > p.L10 + tol) return false;
    return true;
}

bool ConfigCI2::within_limits(const StructuralParams& p, double tol) const {
    if (Ls < -tol || Ls > p.Ls_max + tol) return false;
    if (theta1 < -tol || theta1 > p.theta1_max + tol) return false;
    if (theta2 < -tol || theta2 > p.theta2_max + tol) return false;
    return true;
}

ConfigClass config_class_of(const Config& c) {
    return std::holds_alternative<ConfigCI1>(c) ? ConfigClass::CI1 : ConfigClass::CI2;
}

Mat3 rot_z(double alpha) {
    const double c = std::cos(alpha), s = std::sin(alpha);
    Mat3 m;
    m << c, -s, 0, s, c, 0, 0, 0, 1;
    return m;
}

Mat3 rot_y(double alpha) {
    const double c = std::cos(alpha), s = std::sin(alpha);
    Mat3 m;
    m << c, 0, s, 0, 1, 0, -s, 0, c;
    return m;
}

Mat3 rot_axis(const Vec3& axis, double alpha) {
    return Eigen::AngleAxisd(alpha, axis).toRotationMatrix();
}

double vl_ratio(double theta) {
    const double t = std::abs(theta);
    if (t < 1e-4) {
        const double t2 = t * t;
        return 0.5 + t2 / 24.0 + t2 * t2 / 240.0;
    }
    return std::tan(0.5 * t) / t;
}

double vl_ratio_deriv(double theta) {
    const double t = std::abs(theta);
    if (t < 1e-4) {
        return t / 12.0 + t * t * t / 60.0;
    }
    const double c = std::cos(0.5 * t);
    return (0.5 * t / (c * c) - std::tan(0.5 * t)) / (t * t);
}

double virtual_length(double Lt, double thetat) {
    if (Lt < 0.0) throw std::domain_error("virtual_length: negative segment length");
    if (thetat < 0.0 || thetat >= M_PI) {
        throw std::domain_error("virtual_length: theta outside [0, pi)");
    }
    return Lt * vl_ratio(thetat);
}

double virtual_length_inverse(double l, double Lt) {
    if (Lt <= 0.0) throw std::domain_error("virtual_length_inverse: Lt must be > 0");
    double z = l / Lt;
    if (z < 0.5 - 1e-12) {
        throw std::domain_error("virtual_length_inverse: no solution, l < Lt/2");
    }
    if (z <= 0.5) return 0.0;

    // Safeguarded Newton on vl_ratio(theta) = z over [0, pi).
    double lo = 0.0, hi = M_PI - 1e-9;
    // vl_ratio ~ 2/(pi*(pi-theta)) near pi; pick a starting point from the
    // asymptote when z is large, from the series otherwise.
    double theta = (z > 2.0) ? M_PI - 2.0 / (M_PI * z)
                             : std::sqrt(std::max(0.0, 24.0 * (z - 0.5)));
    theta = std::clamp(theta, lo, hi);
    for (int it = 0; it < 100; ++it) {
        const double f = vl_ratio(theta) - z;
        if (std::abs(f) < 1e-14 * std::max(1.0, z)) break;
        if (f > 0.0) hi = theta; else lo = theta;
        const double df = vl_ratio_deriv(theta);
        double next = theta - f / df;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - theta) < 1e-15) { theta = next; break; }
        theta = next;
    }
    return theta;
}

std::pair<Vec3, Mat3> segment_fk(double Lt, double thetat, double deltat) {
    if (Lt < 0.0) throw std::domain_error("segment_fk: negative segment length");
    if (thetat < 0.0 || thetat >= M_PI) {
        throw std::domain_error("segment_fk: theta outside [0, pi)");
    }
    const Mat3 R = rot_z(-deltat) * rot_y(thetat) * rot_z(deltat);
    Vec3 p;
    if (thetat < 1e-12) {
        p = Vec3(0, 0, Lt);
    } else {
        const double k = Lt / thetat;
        // y carries -sin(delta) so the arc end lies in the bending plane of
        // the orientation chain Rot(z,-d)Rot(y,th)Rot(z,d).
        p = Vec3(k * std::cos(deltat) * (1.0 - std::cos(thetat)),
                 -k * std::sin(deltat) * (1.0 - std::cos(thetat)),
                 k * std::sin(thetat));
    }
    return {p, R};
}

namespace {

struct ChainState {
    Vec3 p = Vec3::Zero();
    Mat3 R = Mat3::Identity();

    void apply(const Vec3& dp, const Mat3& dR) {
        p += R * dp;
        R = R * dR;
    }
    void translate_z(double d) { p += R * Vec3(0, 0, d); }
};

}  // namespace

Pose forward_kinematics(const StructuralParams& params, const ConfigCI1& c) {
    ChainState s;
    s.R = rot_z(c.phi);
    auto [p1, R1] = segment_fk(c.L1, c.theta1, c.delta1);
    s.apply(p1, R1);
    s.translate_z(params.Lr);
    auto [p2, R2] = segment_fk(params.L20, c.theta2, c.delta2);
    s.apply(p2, R2);
    s.translate_z(params.Lg);
    return Pose{s.p, s.R};
}

Pose forward_kinematics(const StructuralParams& params, const ConfigCI2& c) {
    ChainState s;
    s.p = Vec3(0, 0, c.Ls);
    s.R = rot_z(c.phi);
    auto [p1, R1] = segment_fk(params.L10, c.theta1, c.delta1);
    s.apply(p1, R1);
    s.translate_z(params.Lr);
    auto [p2, R2] = segment_fk(params.L20, c.theta2, c.delta2);
    s.apply(p2, R2);
    s.translate_z(params.Lg);
    return Pose{s.p, s.R};
}

Pose forward_kinematics(const StructuralParams& params, const Config& c) {
    return std::visit([&](const auto& cc) { return forward_kinematics(params, cc); }, c);
}

LineSegmentShape shape_points(const Pose& pose, const StructuralParams& params,
                              double l1, double l2, double Ls) {
    LineSegmentShape s;
    s.l1 = l1;
    s.l2 = l2;
    s.p1 = Vec3(0, 0, l1 + Ls);
    s.p2 = pose.p - (l2 + params.Lg) * pose.a();
    return s;
}

double orientation_angle(const Mat3& Ra, const Mat3& Rb) {
    const double tr = (Ra * Rb.transpose()).trace();
    return std::acos(std::clamp(0.5 * (tr - 1.0), -1.0, 1.0));
}

double wrap_angle(double a) {
    a = std::fmod(a, 2.0 * M_PI);
    if (a > M_PI) a -= 2.0 * M_PI;
    if (a <= -M_PI) a += 2.0 * M_PI;
    return a;
}

}  // namespace ccik
