#include "plkcalib/geometry.hpp"

#include <cmath>
#include <string>

#include <Eigen/Geometry>
#include <Eigen/SVD>

namespace plkcalib {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateEndpoints: return "DegenerateEndpoints";
    case ErrorCode::InvalidLine: return "InvalidLine";
    case ErrorCode::InvalidSegment: return "InvalidSegment";
    case ErrorCode::InvalidIntrinsics: return "InvalidIntrinsics";
    case ErrorCode::InvalidPose: return "InvalidPose";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ZeroNormal: return "ZeroNormal";
    case ErrorCode::ProjectionDegenerate: return "ProjectionDegenerate";
    case ErrorCode::InsufficientLines: return "InsufficientLines";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::BehindCamera: return "BehindCamera";
    case ErrorCode::Parse: return "Parse";
  }
  return "Unknown";
}

Mat3 skew(const Vec3& w) {
  Mat3 S;
  S << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
       -w.y(), w.x(), 0.0;
  return S;
}

Mat3 exp_so3(const Vec3& w) {
  const double theta = w.norm();
  const Mat3 W = skew(w);
  if (theta < 1e-8) {
    return Mat3::Identity() + W + 0.5 * W * W;
  }
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / (theta * theta);
  return Mat3::Identity() + a * W + b * W * W;
}

Vec3 log_so3(const Mat3& R) {
  const Eigen::AngleAxisd aa(Eigen::Quaterniond(R).normalized());
  double angle = aa.angle();
  Vec3 axis = aa.axis();
  if (angle > kPi) {
    angle = 2.0 * kPi - angle;
    axis = -axis;
  }
  return angle * axis;
}

Mat3 orthonormalize(const Mat3& M) {
  Eigen::JacobiSVD<Mat3> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 D = Mat3::Identity();
  D(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return svd.matrixU() * D * svd.matrixV().transpose();
}

// ---------------------------------------------------------------------------
// PluckerLine

PluckerLine::PluckerLine(const Vec3& normal, const Vec3& direction)
    : n_(normal), v_(direction) {
  if (!n_.allFinite() || !v_.allFinite()) {
    throw CalibError(ErrorCode::InvalidLine, "Plücker line has non-finite coordinates");
  }
  if (v_.norm() <= 0.0) {
    throw CalibError(ErrorCode::InvalidLine, "Plücker line direction is zero");
  }
  const double scale = std::max(1.0, n_.norm() * v_.norm());
  if (std::abs(n_.dot(v_)) > 1e-9 * scale) {
    throw CalibError(ErrorCode::InvalidLine, "Plücker constraint n . v = 0 violated");
  }
}

PluckerLine PluckerLine::from_endpoints(const Vec3& p1, const Vec3& p2, double eps) {
  if (!p1.allFinite() || !p2.allFinite()) {
    throw CalibError(ErrorCode::DegenerateEndpoints, "line endpoints are not finite");
  }
  if ((p2 - p1).norm() <= eps) {
    throw CalibError(ErrorCode::DegenerateEndpoints, "line endpoints coincide");
  }
  return PluckerLine(p1.cross(p2), p2 - p1);
}

Vec3 PluckerLine::unit_normal() const {
  const double m = n_.norm();
  return m > 0.0 ? Vec3(n_ / m) : Vec3::Zero();
}

// ---------------------------------------------------------------------------
// LineSegment2D

LineSegment2D::LineSegment2D(const Vec2& start, const Vec2& end) : start_(start), end_(end) {
  if (!start_.allFinite() || !end_.allFinite()) {
    throw CalibError(ErrorCode::InvalidSegment, "segment endpoints are not finite");
  }
  if ((end_ - start_).norm() <= kDegenerateEndpointEps) {
    throw CalibError(ErrorCode::InvalidSegment, "segment endpoints coincide");
  }
}

// ---------------------------------------------------------------------------
// CameraIntrinsics

void CameraIntrinsics::validate() const {
  if (!std::isfinite(fu) || !std::isfinite(fv) || !std::isfinite(cu) || !std::isfinite(cv)) {
    throw CalibError(ErrorCode::InvalidIntrinsics, "intrinsics must be finite");
  }
  if (fu <= 0.0 || fv <= 0.0) {
    throw CalibError(ErrorCode::InvalidIntrinsics, "focal lengths fu and fv must be positive");
  }
}

Mat3 CameraIntrinsics::camera_matrix() const {
  Mat3 Kc;
  Kc << fu, 0.0, cu,
        0.0, fv, cv,
        0.0, 0.0, 1.0;
  return Kc;
}

Vec2 CameraIntrinsics::project_point(const Vec3& p_cam) const {
  if (!(p_cam.z() > 0.0)) {
    throw CalibError(ErrorCode::BehindCamera, "point has nonpositive depth in the camera frame");
  }
  return {fu * p_cam.x() / p_cam.z() + cu, fv * p_cam.y() / p_cam.z() + cv};
}

// ---------------------------------------------------------------------------
// ExtrinsicPose

ExtrinsicPose::ExtrinsicPose(const Mat3& rotation, const Vec3& translation, double tol)
    : R_(rotation), P_(translation) {
  if (!R_.allFinite() || !P_.allFinite()) {
    throw CalibError(ErrorCode::InvalidPose, "pose has non-finite entries");
  }
  const double ortho = (R_.transpose() * R_ - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (ortho > tol) {
    throw CalibError(ErrorCode::InvalidPose,
                     "rotation is not orthonormal (|R^T R - I| = " + std::to_string(ortho) + ")");
  }
  if (std::abs(R_.determinant() - 1.0) > tol) {
    throw CalibError(ErrorCode::InvalidPose, "rotation determinant is not +1");
  }
}

ExtrinsicPose ExtrinsicPose::inverse() const {
  const Mat3 Rt = R_.transpose();
  return ExtrinsicPose(Rt, -Rt * P_);
}

ExtrinsicPose compose(const ExtrinsicPose& a, const ExtrinsicPose& b) {
  return ExtrinsicPose(orthonormalize(a.rotation() * b.rotation()),
                       a.rotation() * b.translation() + a.translation());
}

// ---------------------------------------------------------------------------
// Line operations

PluckerLine plucker_from_endpoints(const Vec3& p1, const Vec3& p2, double eps) {
  return PluckerLine::from_endpoints(p1, p2, eps);
}

PluckerLine transform_line(const ExtrinsicPose& pose, const PluckerLine& line) {
  const Mat3& R = pose.rotation();
  const Vec3 Rv = R * line.direction();
  const Vec3 n = R * line.normal() + pose.translation().cross(Rv);
  return PluckerLine(n, Rv);
}

Mat3 line_projection_matrix(const CameraIntrinsics& intr) {
  intr.validate();
  Mat3 K;
  K << intr.fv, 0.0, 0.0,
       0.0, intr.fu, 0.0,
       -intr.fv * intr.cu, -intr.fu * intr.cv, intr.fu * intr.fv;
  return K;
}

Vec3 project_line(const Mat3& K, const PluckerLine& line_cam) {
  if (line_cam.normal().norm() == 0.0) {
    throw CalibError(ErrorCode::ZeroNormal,
                     "line passes through the camera centre and has no image projection");
  }
  return K * line_cam.normal();
}

Vec3 back_project_direction(const Mat3& K, const Vec3& image_line) {
  if (image_line.norm() == 0.0) {
    throw CalibError(ErrorCode::InvalidSegment, "image line coefficients are all zero");
  }
  return K.partialPivLu().solve(image_line);
}

ExtrinsicPose pose_retract(const ExtrinsicPose& pose, const Vec3& dtheta, const Vec3& dP) {
  const Mat3 R = exp_so3(dtheta) * pose.rotation();
  // Renormalizing through a unit quaternion keeps repeated retractions on SO(3).
  const Mat3 Rn = Eigen::Quaterniond(R).normalized().toRotationMatrix();
  return ExtrinsicPose(Rn, pose.translation() + dP);
}

PoseError pose_error(const ExtrinsicPose& est, const ExtrinsicPose& gt) {
  const Mat3 dR = gt.rotation().transpose() * est.rotation();
  return {rad2deg(log_so3(dR).norm()), (est.translation() - gt.translation()).norm()};
}

}  // namespace plkcalib
