#include "plkcalib/method1.hpp"

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "plkcalib/levenberg_marquardt.hpp"

namespace plkcalib::method1 {
namespace {

constexpr double kMinLineGradient = 1e-12;

struct Projection {
  Vec3 l;
  double scale;  // sqrt(l1^2 + l2^2)
};

Projection project(const Correspondence& corr, const ExtrinsicPose& pose, const Mat3& K) {
  const PluckerLine cam = transform_line(pose, corr.line);
  const Vec3 l = K * cam.normal();
  const double s = std::hypot(l.x(), l.y());
  if (!(s > kMinLineGradient * l.norm()) || s == 0.0) {
    throw CalibError(ErrorCode::ProjectionDegenerate,
                     "projection of line '" + corr.id + "' is the line at infinity");
  }
  return {l, s};
}

}  // namespace

Vec2 residual(const Correspondence& corr, const ExtrinsicPose& pose, const Mat3& K) {
  const auto [l, s] = project(corr, pose, K);
  return Vec2(corr.segment.start_h().dot(l), corr.segment.end_h().dot(l)) / s;
}

Jacobian26 jacobian(const Correspondence& corr, const ExtrinsicPose& pose, const Mat3& K) {
  const auto [l, s] = project(corr, pose, K);
  const double s2 = s * s;

  // d r / d l
  Eigen::Matrix<double, 2, 3> dr_dl;
  const Vec3 xs = corr.segment.start_h();
  const Vec3 xe = corr.segment.end_h();
  const double ds = xs.dot(l);
  const double de = xe.dot(l);
  dr_dl << xs.x() - l.x() * ds / s2, xs.y() - l.y() * ds / s2, 1.0,
           xe.x() - l.x() * de / s2, xe.y() - l.y() * de / s2, 1.0;
  dr_dl /= s;

  // d l / d n_C = K; the direction block of the projection is zero.
  const Mat3& R = pose.rotation();
  const Vec3 Rv = R * corr.line.direction();
  const Vec3 Rn_e = R * corr.line.unit_normal();
  const double d_l = corr.line.normal_magnitude();

  // Left increment R <- exp([dtheta]x) R perturbs n_C by
  //   dtheta x (R n) + P x (dtheta x R v).
  const Mat3 dn_dtheta = -d_l * skew(Rn_e) - skew(pose.translation()) * skew(Rv);
  const Mat3 dn_dP = -skew(Rv);

  Jacobian26 J;
  J.leftCols<3>() = dr_dl * K * dn_dtheta;
  J.rightCols<3>() = dr_dl * K * dn_dP;
  return J;
}

void fill_reprojection(std::span<const Correspondence> corrs, const Mat3& K,
                       CalibrationResult& result) {
  result.per_line_residuals.clear();
  result.residual_ids.clear();
  result.final_cost = 0.0;
  for (const auto& c : corrs) {
    try {
      const Vec2 r = residual(c, result.pose, K);
      result.per_line_residuals.push_back(r);
      result.residual_ids.push_back(c.id);
      result.final_cost += r.squaredNorm();
    } catch (const CalibError& e) {
      if (e.code() != ErrorCode::ProjectionDegenerate) throw;
    }
  }
}

CalibrationResult solve(std::span<const Correspondence> corrs, const ExtrinsicPose& init,
                        const Mat3& K, const SolverConfig& cfg) {
  cfg.validate();
  if (corrs.size() < 3) {
    throw CalibError(ErrorCode::InsufficientLines, "at least 3 line pairs required");
  }

  CalibrationResult result;
  std::vector<Correspondence> usable;
  usable.reserve(corrs.size());
  for (const auto& c : corrs) {
    try {
      (void)residual(c, init, K);
      usable.push_back(c);
    } catch (const CalibError& e) {
      if (e.code() != ErrorCode::ProjectionDegenerate) throw;
      result.warnings.push_back("skipping line '" + c.id + "': " + e.what());
    }
  }
  if (usable.size() < 3) {
    throw CalibError(ErrorCode::InsufficientLines,
                     "at least 3 line pairs required after skipping unprojectable lines");
  }

  const auto n = static_cast<Eigen::Index>(usable.size());
  auto evaluate = [&](const ExtrinsicPose& pose, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
    r.resize(2 * n);
    if (J) J->resize(2 * n, 6);
    for (Eigen::Index i = 0; i < n; ++i) {
      try {
        r.segment<2>(2 * i) = residual(usable[i], pose, K);
        if (J) J->block<2, 6>(2 * i, 0) = jacobian(usable[i], pose, K);
      } catch (const CalibError& e) {
        if (e.code() != ErrorCode::ProjectionDegenerate) throw;
        // Only reachable for trial states; make sure the step is rejected.
        r.segment<2>(2 * i).setConstant(1e12);
        if (J) J->block<2, 6>(2 * i, 0).setZero();
      }
    }
  };
  auto retract = [](const ExtrinsicPose& pose, const Eigen::VectorXd& d) {
    return pose_retract(pose, d.head<3>(), d.tail<3>());
  };

  auto lm = levenberg_marquardt(init, evaluate, retract, cfg);

  result.pose = lm.state;
  result.iterations = lm.iterations;
  result.converged = lm.converged;
  result.cost_history = std::move(lm.cost_history);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(lm.jacobian);
  const auto& sv = svd.singularValues();
  const double ratio = sv(0) > 0.0 ? sv(sv.size() - 1) / sv(0) : 0.0;
  result.degeneracy.jacobian_singular_ratio = ratio;
  result.degeneracy.jacobian_degenerate = ratio < cfg.degeneracy_ratio;

  fill_reprojection(usable, K, result);
  return result;
}

}  // namespace plkcalib::method1
