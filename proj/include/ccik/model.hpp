#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <variant>

namespace ccik {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Fixed geometry and configuration limits of the robot. Lengths in mm,
// angles in rad. Defaults are the reference design used throughout the
// test suite.
struct StructuralParams {
    double L10 = 40.0;         // full length of segment 1
    double L20 = 60.0;         // full length of segment 2
    double Lr = 20.0;          // rigid middle stem
    double Lg = 20.0;          // end effector
    double Ls_max = 150.0;     // base-stem insertion upper limit
    double theta1_max = M_PI / 2.0;
    double theta2_max = 2.0 * M_PI / 3.0;
    double r1_min = 80.0 / M_PI;  // segment-1 minimum bending radius

    // Throws std::invalid_argument on violated invariants.
    void validate() const;

    // Flat key-value file ("key value" or "key = value", '#' comments).
    // Keys not present keep their defaults; unknown keys are an error.
    static StructuralParams load(const std::string& path);
};

// Partially inserted segment 1 (variable length L1), fixed segment 2.
struct ConfigCI1 {
    double phi = 0.0;     // actuation-unit rotation
    double theta1 = 0.0;
    double L1 = 0.0;      // inserted length of segment 1
    double delta1 = 0.0;
    double theta2 = 0.0;
    double delta2 = 0.0;

    bool within_limits(const StructuralParams& p, double tol = 1e-9) const;
};

// Fully inserted segment 1; base stem translates by Ls.
struct ConfigCI2 {
    double Ls = 0.0;      // base-stem insertion
    double phi = 0.0;
    double theta1 = 0.0;
    double delta1 = 0.0;
    double theta2 = 0.0;
    double delta2 = 0.0;

    bool within_limits(const StructuralParams& p, double tol = 1e-9) const;
};

enum class ConfigClass { CI1, CI2 };

using Config = std::variant<ConfigCI1, ConfigCI2>;

ConfigClass config_class_of(const Config& c);

struct Pose {
    Vec3 p = Vec3::Zero();
    Mat3 R = Mat3::Identity();

    // End-effector pointing direction (third column of R).
    Vec3 a() const { return R.col(2); }
};

// Piecewise line-segment representation of the robot shape: p1 and p2 are
// the tangent-line intersection points of segments 1 and 2; l1, l2 the
// corresponding virtual tangent lengths.
struct LineSegmentShape {
    Vec3 p1 = Vec3::Zero();
    Vec3 p2 = Vec3::Zero();
    double l1 = 0.0;
    double l2 = 0.0;
};

Mat3 rot_z(double alpha);
Mat3 rot_y(double alpha);

// Rotation about an arbitrary unit axis (Rodrigues semantics).
Mat3 rot_axis(const Vec3& axis, double alpha);

// tan(theta/2)/theta, continuous at 0 with value 1/2 (series below 1e-4),
// and its derivative. Both require 0 <= theta < pi.
double vl_ratio(double theta);
double vl_ratio_deriv(double theta);

// Virtual tangent length l = Lt * tan(theta/2)/theta of a bent segment.
// Throws std::domain_error for theta outside [0, pi) or Lt < 0.
double virtual_length(double Lt, double thetat);

// Unique theta in [0, pi) with virtual_length(Lt, theta) = l.
// Throws std::domain_error when l < Lt/2 (no solution).
double virtual_length_inverse(double l, double Lt);

// Pose of a single constant-curvature segment end frame relative to its
// base frame. Throws std::domain_error for thetat outside [0, pi).
std::pair<Vec3, Mat3> segment_fk(double Lt, double thetat, double deltat);

Pose forward_kinematics(const StructuralParams& params, const ConfigCI1& c);
Pose forward_kinematics(const StructuralParams& params, const ConfigCI2& c);
Pose forward_kinematics(const StructuralParams& params, const Config& c);

// Tangent-line intersection points for a given end-effector pose:
// p1 = [0 0 l1+Ls], p2 = p - (l2+Lg) a.
LineSegmentShape shape_points(const Pose& pose, const StructuralParams& params,
                              double l1, double l2, double Ls);

// Rotation angle between two orthonormal frames.
double orientation_angle(const Mat3& Ra, const Mat3& Rb);

// Wrap to (-pi, pi].
double wrap_angle(double a);

}  // namespace ccik
