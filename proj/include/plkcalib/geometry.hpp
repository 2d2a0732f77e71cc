#pragma once

// Plücker line geometry, rigid transforms and the pinhole line-projection model
// shared by both extrinsic solvers.
//
// Frames: L is the LiDAR frame, C is the camera frame. An ExtrinsicPose maps
// LiDAR points into the camera as x_C = R * x_L + P.
//
// Rotation increments are applied on the left: R <- exp([dtheta]x) * R.
// Every analytic Jacobian in this library is written for that convention.

#include <utility>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "plkcalib/errors.hpp"

namespace plkcalib {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kDegenerateEndpointEps = 1e-9;
inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Skew-symmetric cross-product matrix: skew(w) * a == w.cross(a).
Mat3 skew(const Vec3& w);

/// Rodrigues exponential of so(3); falls back to a second-order series when
/// |w| < 1e-8.
Mat3 exp_so3(const Vec3& w);

/// Rotation vector of R, angle in [0, pi].
Vec3 log_so3(const Mat3& R);

/// 3D line in Plücker coordinates (n, v): v is the direction and n the normal
/// of the plane through the line and the origin. Stored unnormalized, exactly
/// as built from endpoints, so n = |n| * n_e carries the scale of the plane
/// normal.
class PluckerLine {
 public:
  /// Validates v != 0 and n . v == 0 (relative tolerance 1e-9).
  PluckerLine(const Vec3& normal, const Vec3& direction);

  /// n = p1 x p2, v = p2 - p1. Throws DegenerateEndpoints if |p2 - p1| <= eps.
  static PluckerLine from_endpoints(const Vec3& p1, const Vec3& p2,
                                    double eps = kDegenerateEndpointEps);

  const Vec3& normal() const { return n_; }
  const Vec3& direction() const { return v_; }

  /// |n|, the d_l factor in n = d_l * n_e.
  double normal_magnitude() const { return n_.norm(); }
  /// Unit plane normal n_e; zero when the line passes through the origin.
  Vec3 unit_normal() const;
  Vec3 unit_direction() const { return v_.normalized(); }
  /// Perpendicular distance from the origin to the line.
  double distance_to_origin() const { return n_.norm() / v_.norm(); }

  PluckerLine scaled(double s) const { return PluckerLine(s * n_, s * v_); }

 private:
  Vec3 n_;
  Vec3 v_;
};

/// Image line segment in pixels. The homogeneous line is l = x_s x x_e.
class LineSegment2D {
 public:
  /// Throws InvalidSegment for coincident or non-finite endpoints.
  LineSegment2D(const Vec2& start, const Vec2& end);

  const Vec2& start() const { return start_; }
  const Vec2& end() const { return end_; }
  Vec3 start_h() const { return {start_.x(), start_.y(), 1.0}; }
  Vec3 end_h() const { return {end_.x(), end_.y(), 1.0}; }
  Vec3 line() const { return start_h().cross(end_h()); }
  double length() const { return (end_ - start_).norm(); }
  Vec2 direction() const { return (end_ - start_).normalized(); }

  bool operator==(const LineSegment2D&) const = default;

 private:
  Vec2 start_;
  Vec2 end_;
};

/// Pinhole intrinsics of an undistorted camera.
struct CameraIntrinsics {
  double fu = 1.0;
  double fv = 1.0;
  double cu = 0.0;
  double cv = 0.0;

  /// Throws InvalidIntrinsics unless fu > 0 and fv > 0 (and all finite).
  void validate() const;
  /// Point projection matrix [[fu,0,cu],[0,fv,cv],[0,0,1]].
  Mat3 camera_matrix() const;
  /// Pixel of a camera-frame point; throws BehindCamera when z <= 0.
  Vec2 project_point(const Vec3& p_cam) const;

  bool operator==(const CameraIntrinsics&) const = default;
};

/// Rigid LiDAR-to-camera transform {R, P}.
class ExtrinsicPose {
 public:
  ExtrinsicPose() : R_(Mat3::Identity()), P_(Vec3::Zero()) {}
  /// Throws InvalidPose unless R^T R = I and det R = +1 within `tol`.
  ExtrinsicPose(const Mat3& rotation, const Vec3& translation, double tol = 1e-9);

  static ExtrinsicPose identity() { return {}; }

  const Mat3& rotation() const { return R_; }
  const Vec3& translation() const { return P_; }

  Vec3 transform_point(const Vec3& p) const { return R_ * p + P_; }
  ExtrinsicPose inverse() const;

  bool operator==(const ExtrinsicPose&) const = default;

 private:
  Mat3 R_;
  Vec3 P_;
};

/// a * b: apply b first, then a.
ExtrinsicPose compose(const ExtrinsicPose& a, const ExtrinsicPose& b);

PluckerLine plucker_from_endpoints(const Vec3& p1, const Vec3& p2,
                                   double eps = kDegenerateEndpointEps);

/// n_C = R n_L + [P]x R v_L, v_C = R v_L.
PluckerLine transform_line(const ExtrinsicPose& pose, const PluckerLine& line);

/// 3x3 line-projection matrix
///   [[fv, 0, 0], [0, fu, 0], [-fv*cu, -fu*cv, fu*fv]].
Mat3 line_projection_matrix(const CameraIntrinsics& intr);

/// Homogeneous image line l = K * n_C. Throws ZeroNormal for lines through the
/// camera centre.
Vec3 project_line(const Mat3& K, const PluckerLine& line_cam);

/// Normal of the plane back-projected from an image line, K^-1 * l (up to
/// scale).
Vec3 back_project_direction(const Mat3& K, const Vec3& image_line);

/// R <- exp([dtheta]x) R, P <- P + dP.
ExtrinsicPose pose_retract(const ExtrinsicPose& pose, const Vec3& dtheta, const Vec3& dP);

struct PoseError {
  double rot_err_deg = 0.0;
  double trans_err_m = 0.0;
};

/// Geodesic angle |log(R_gt^T R_est)| in degrees and |P_est - P_gt| in meters.
PoseError pose_error(const ExtrinsicPose& est, const ExtrinsicPose& gt);

/// Nearest rotation matrix in the Frobenius sense.
Mat3 orthonormalize(const Mat3& M);

}  // namespace plkcalib
