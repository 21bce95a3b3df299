#pragma once

#include <array>
#include <optional>

#include "ccik/model.hpp"

namespace ccik {

struct SolverSettings {
    double residual_ci2 = 0.01;    // Eq.-residual threshold, CI-2 scalar solve
    double residual_ci1 = 3e-4;    // Eq.-residual threshold, CI-1 scalar solve
    int max_iterations = 200;
    double pos_tol = 0.01;         // mm
    double ori_tol = 0.01;         // rad
    int theta_overflow_count = 3;  // consecutive iterates beyond pi => non-real
    // The exhaustive root scan makes classification complete; fast callers
    // that only need "some solution" (position membership sweeps) disable it.
    bool completeness_scan = true;

    void validate() const;
};

enum class SolveStatus {
    Solved,
    InfeasibleOrientation,  // real solution exists but violates config limits
    NonRealSolution,        // no real solution of the scalar equation
    NoConvergence,
};

enum class RootBranch { first_root, second_root };

const char* to_string(SolveStatus s);

struct IKOutcome {
    SolveStatus status = SolveStatus::NoConvergence;
    std::optional<Config> config;  // present iff status == Solved
    int iterations = 0;
    double pos_err = std::numeric_limits<double>::infinity();  // mm
    double ori_err = std::numeric_limits<double>::infinity();  // rad
    RootBranch branch_used = RootBranch::first_root;           // CI-2 only

    bool solved() const { return status == SolveStatus::Solved; }
};

// One evaluation of the CI-2 scalar equation at a given theta1. The l2
// candidates come from the radial-closure quadratic; `value` is the
// arc-length residual of the selected root.
struct ResidualCI2 {
    bool valid = false;          // residual evaluable at this theta1
    bool complex_roots = false;  // quadratic discriminant < 0
    double value = 0.0;
    double l1 = 0.0;
    double l2 = 0.0;             // selected root
    double theta2 = 0.0;         // implied bending angle of segment 2
    std::array<double, 2> l2_roots{0.0, 0.0};
    int n_roots = 0;
};

ResidualCI2 residual_ci2(double theta1, const Pose& target, const StructuralParams& params,
                         RootBranch branch = RootBranch::first_root);

struct ResidualCI1 {
    bool valid = false;
    double value = 0.0;
    double l1 = 0.0;
    double l2 = 0.0;
};

ResidualCI1 residual_ci1(double theta2, const Pose& target, const StructuralParams& params);

// Recovered bending-direction angles of a solved shape.
struct OrientationAngles {
    double phi = 0.0;
    double delta1 = 0.0;
    double delta2 = 0.0;
};

// Solves phi, delta1, delta2 from the line-segment shape and the target
// orientation. Requires theta1/theta2 consistent with the shape; throws
// std::domain_error if the direction of p2 is degenerate while theta1 > 0.
OrientationAngles recover_orientation_angles(const LineSegmentShape& shape, const Pose& target,
                                             double theta1, double theta2,
                                             const StructuralParams& params);

IKOutcome solve_ci1(const Pose& target, const StructuralParams& params,
                    const SolverSettings& settings = {});
IKOutcome solve_ci2(const Pose& target, const StructuralParams& params,
                    const SolverSettings& settings = {});
IKOutcome solve(const Pose& target, const StructuralParams& params, ConfigClass cls,
                const SolverSettings& settings = {});

}  // namespace ccik
