#pragma once

// PLK-Calib: decoupled extrinsic estimation from Plücker line constraints.
//
// Stage 1 (co-perpendicular): the back-projected plane normal K^-1 l' of each
// image line is orthogonal to the rotated LiDAR line direction R v_L. This
// involves R only and is minimised with Levenberg-Marquardt on SO(3).
//
// Stage 2 (co-parallel): with R fixed, K^-1 l' is parallel to the camera-frame
// normal R n_L + [P]x R v_L, which is linear in P:
//   [K^-1 l']x [R v_L]x P = [K^-1 l']x R n_L
// Stacking all lines gives a least-squares system solved by SVD.

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "plkcalib/calibration.hpp"

namespace plkcalib::method2 {

struct RotationObservation {
  Vec3 image_line;  // homogeneous l'
  Vec3 direction;   // v_L, LiDAR frame
  std::string id;
};

struct RotationProblem {
  std::vector<RotationObservation> lines;
  Mat3 K_inv_T;  // (K^-1)^T

  static RotationProblem from_correspondences(std::span<const Correspondence> corrs,
                                              const Mat3& K);
};

struct RotationSolution {
  Mat3 R = Mat3::Identity();
  double initial_cost = 0.0;  // normalised sum of r'^2 at R_init
  double final_cost = 0.0;
  int iterations = 0;
  bool converged = false;
  bool degenerate = false;
  double direction_span_ratio = 0.0;  // sigma_2 / sigma_1 of stacked unit directions
  std::vector<double> cost_history;
};

struct TranslationSystem {
  Eigen::MatrixXd A;  // 3N x 3
  Eigen::VectorXd b;  // 3N
  std::vector<std::string> row_ids;
};

struct TranslationSolution {
  Vec3 P = Vec3::Zero();
  double singular_ratio = 0.0;  // sigma_min / sigma_max of A
  bool degenerate = false;
  double residual_norm = 0.0;   // |A P - b|
};

/// r' = l'^T (K^-1)^T R v_L.
double rotation_residual(const Vec3& image_line, const Vec3& direction, const Mat3& R,
                         const Mat3& K);

/// Gradient of r'^2 w.r.t. the left rotation increment:
///   2 r' * (-(K^-1 l')^T [R v_L]x).
Eigen::RowVector3d rotation_jacobian(const Vec3& image_line, const Vec3& direction,
                                     const Mat3& R, const Mat3& K);

/// Minimises sum r'^2 over R with each K^-1 l' and v_L unit-normalised.
/// Throws InsufficientLines for fewer than 3 lines; directions spanning fewer
/// than two dimensions set `degenerate` and the solve still runs.
RotationSolution solve_rotation(const RotationProblem& problem, const Mat3& R_init,
                                const SolverConfig& cfg = {});

/// Row block per line: A_i = [m_i]x [R v_i]x, b_i = [m_i]x R n_i, with m_i the
/// unit back-projected normal.
TranslationSystem build_translation_system(std::span<const Correspondence> corrs, const Mat3& R,
                                           const Mat3& K);

/// SVD least-squares solution of A P = b. Throws InsufficientLines when the
/// system has fewer than 3 line blocks; a singular-value ratio below
/// `degeneracy_ratio` sets `degenerate`.
TranslationSolution solve_translation(const TranslationSystem& sys,
                                      double degeneracy_ratio = 1e-8);

/// Rotation stage, then translation from the rotation stage output.
CalibrationResult solve_plk_calib(std::span<const Correspondence> corrs,
                                  const ExtrinsicPose& init, const Mat3& K,
                                  const SolverConfig& cfg = {});

}  // namespace plkcalib::method2
