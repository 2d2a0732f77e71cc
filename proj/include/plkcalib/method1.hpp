#pragma once

// Projection-error solver: joint Levenberg-Marquardt over rotation and
// translation minimising signed endpoint-to-projected-line distances.

#include <span>

#include <Eigen/Core>

#include "plkcalib/calibration.hpp"

namespace plkcalib::method1 {

using Jacobian26 = Eigen::Matrix<double, 2, 6>;

/// Signed pixel distances of the segment endpoints to the projection of the
/// LiDAR line under `pose`. Throws ProjectionDegenerate when the projected
/// line has l1 = l2 = 0.
Vec2 residual(const Correspondence& corr, const ExtrinsicPose& pose, const Mat3& K);

/// d residual / d [dtheta, dP] for the left-multiplied rotation increment of
/// pose_retract. Columns 0-2 rotation, 3-5 translation.
Jacobian26 jacobian(const Correspondence& corr, const ExtrinsicPose& pose, const Mat3& K);

/// Requires at least three correspondences (InsufficientLines). A rank
/// deficient final Jacobian is reported through result.degeneracy, not thrown.
CalibrationResult solve(std::span<const Correspondence> corrs, const ExtrinsicPose& init,
                        const Mat3& K, const SolverConfig& cfg = {});

/// Fills per_line_residuals, residual_ids and final_cost of `result` at
/// result.pose. Correspondences whose projection degenerates are skipped.
void fill_reprojection(std::span<const Correspondence> corrs, const Mat3& K,
                       CalibrationResult& result);

}  // namespace plkcalib::method1
