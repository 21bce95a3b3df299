#pragma once

#include "ccik/model.hpp"
#include "ccik/vsik.hpp"

namespace ccik {

struct DlsSettings {
    double damping = 0.03;       // lambda in Jt (J Jt + lambda^2 I)^-1
    double step_scale = 1.0;
    int max_iterations = 200;
    int stagnation_window = 30;  // orientation non-improvement window after
                                 // position convergence (position_first mode)
    double pos_tol = 0.01;       // mm
    double ori_tol = 0.01;       // rad
    double ori_weight = 0.3;     // orientation row weight in position_first mode

    void validate() const;
};

enum class DlsPriority { full_pose, position_first };

using Jacobian6 = Eigen::Matrix<double, 6, 6>;

// Central-difference Jacobian of the task-space twist (position; rotation-log
// orientation) with respect to the six configuration variables. Steps that
// would leave a variable's domain are taken one-sided.
Jacobian6 numerical_jacobian(const Config& config, const StructuralParams& params);

// One damped-least-squares update, box-projected onto the configuration
// limits.
Config dls_step(const Config& config, const Pose& target, const StructuralParams& params,
                const DlsSettings& settings, DlsPriority priority = DlsPriority::full_pose);

IKOutcome solve_dls(const Pose& target, const StructuralParams& params, ConfigClass cls,
                    const DlsSettings& settings = {},
                    DlsPriority priority = DlsPriority::full_pose);

// Task-space error target vs current: [position; rotation-log].
Eigen::Matrix<double, 6, 1> task_error(const Pose& target, const Pose& current);

}  // namespace ccik
