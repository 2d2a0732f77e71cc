#pragma once

// File formats: JSON calibration input and report (schema_version 1), plain
// text segment lists and the Monte Carlo trial CSV.

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "plkcalib/calibration.hpp"
#include "plkcalib/sim.hpp"

namespace plkcalib::io {

inline constexpr int kSchemaVersion = 1;

/// Rotations whose orthonormality defect exceeds this are projected onto
/// SO(3) with a warning; above kRotationRejectDefect they are rejected.
inline constexpr double kRotationWarnDefect = 1e-6;
inline constexpr double kRotationRejectDefect = 1e-3;

struct LinePair {
  std::string id;
  Vec3 p1;  // LiDAR frame, m
  Vec3 p2;
  LineSegment2D segment;  // px

  bool operator==(const LinePair&) const = default;
};

struct CalibrationInput {
  CameraIntrinsics intrinsics;
  ExtrinsicPose initial_pose;
  std::optional<ExtrinsicPose> ground_truth;
  std::vector<LinePair> pairs;
  std::vector<std::string> warnings;  // load-time notes, not serialized

  std::vector<Correspondence> correspondences() const;
};

/// Throws CalibError(Parse) for malformed JSON or missing fields and the
/// matching validation code otherwise; messages carry the offending line id.
CalibrationInput parse_calibration_input(std::string_view text);
CalibrationInput load_calibration_input(const std::string& path);
std::string write_calibration_input(const CalibrationInput& in);

/// Frobenius defect |R^T R - I| plus |det R - 1|.
double rotation_defect(const Mat3& R);

/// Returns R unchanged when already a rotation to 1e-9, the nearest rotation
/// when the defect is below kRotationRejectDefect (appending a warning above
/// kRotationWarnDefect), and throws InvalidPose otherwise.
Mat3 sanitize_rotation(const Mat3& R, std::string_view what, std::vector<std::string>& warnings);

struct Report {
  std::string method;
  ExtrinsicPose pose;
  std::optional<PoseError> error_vs_ground_truth;
  std::vector<std::string> residual_ids;
  std::vector<Vec2> residuals_px;
  DegeneracyReport degeneracy;
  int iterations = 0;
  bool converged = false;
  double final_cost_px2 = 0.0;
  double rotation_cost = DegeneracyReport::kUnset;
  double translation_cost = DegeneracyReport::kUnset;
  double wall_time_s = 0.0;
  std::vector<std::string> warnings;
};

Report make_report(std::string method, const CalibrationResult& result,
                   const std::optional<ExtrinsicPose>& ground_truth, double wall_time_s);
std::string write_report(const Report& report);
Report parse_report(std::string_view text);

/// One segment per record: "u_s v_s u_e v_e". Blank lines and text after '#'
/// are ignored. Malformed records throw CalibError(Parse) naming the line.
std::vector<LineSegment2D> read_segments(std::istream& in);
void write_segments(std::ostream& out, std::span<const LineSegment2D> segments);

inline constexpr std::string_view kTrialCsvHeader =
    "scenario,method,trial,rot_err_deg,trans_err_m,converged,degenerate";

/// Header plus one row per trial, reports in the given order.
void write_trials_csv(std::ostream& out, std::span<const sim::TrialReport> reports);

std::string read_file(const std::string& path);

}  // namespace plkcalib::io
