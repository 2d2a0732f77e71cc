#pragma once

#include <limits>
#include <string>
#include <vector>

#include "plkcalib/geometry.hpp"

namespace plkcalib {

/// A matched LiDAR line (LiDAR frame) and image segment.
struct Correspondence {
  PluckerLine line;
  LineSegment2D segment;
  std::string id;
};

struct SolverConfig {
  int max_iterations = 100;
  double cost_tolerance = 1e-12;  // absolute change of the accepted cost
  double step_tolerance = 1e-10;  // norm of the tangent step
  double initial_lambda = 1e-3;
  double lambda_up = 10.0;
  double lambda_down = 0.1;
  // sigma_min / sigma_max below this marks a rank-deficient problem.
  double degeneracy_ratio = 1e-8;

  /// Throws InvalidConfig when a field is out of range.
  void validate() const;
};

struct DegeneracyReport {
  static constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

  bool jacobian_degenerate = false;     // stacked 2N x 6 Jacobian (projection-error solver)
  bool rotation_degenerate = false;     // line directions span < 2 dimensions
  bool translation_degenerate = false;  // co-parallel system rank-deficient
  double jacobian_singular_ratio = kUnset;
  double direction_span_ratio = kUnset;
  double translation_singular_ratio = kUnset;

  bool degenerate() const {
    return jacobian_degenerate || rotation_degenerate || translation_degenerate;
  }
};

struct CalibrationResult {
  ExtrinsicPose pose;
  double final_cost = 0.0;  // sum of squared point-to-line distances, px^2
  int iterations = 0;
  bool converged = false;
  std::vector<Vec2> per_line_residuals;  // px, one entry per usable correspondence
  std::vector<std::string> residual_ids;
  DegeneracyReport degeneracy;
  std::vector<double> cost_history;  // initial cost followed by every accepted step
  std::vector<std::string> warnings;
  // Stage costs of the decoupled solver (NaN for the joint solver).
  double rotation_cost = DegeneracyReport::kUnset;
  double translation_cost = DegeneracyReport::kUnset;
};

}  // namespace plkcalib
