#include "plkcalib/method2.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include "plkcalib/levenberg_marquardt.hpp"
#include "plkcalib/method1.hpp"

namespace plkcalib::method2 {
RotationProblem RotationProblem::from_correspondences(std::span<const Correspondence> corrs,
                                                      const Mat3& K) {
  RotationProblem p;
  p.K_inv_T = K.inverse().transpose();
  p.lines.reserve(corrs.size());
  for (const auto& c : corrs) {
    p.lines.push_back({c.segment.line(), c.line.direction(), c.id});
  }
  return p;
}

double rotation_residual(const Vec3& image_line, const Vec3& direction, const Mat3& R,
                         const Mat3& K) {
  const Mat3 K_inv_T = K.inverse().transpose();
  return image_line.transpose() * K_inv_T * R * direction;
}

Eigen::RowVector3d rotation_jacobian(const Vec3& image_line, const Vec3& direction,
                                     const Mat3& R, const Mat3& K) {
  const Mat3 K_inv_T = K.inverse().transpose();
  const double r = image_line.transpose() * K_inv_T * R * direction;
  // The increment enters as exp([dtheta]x) R v, so the derivative involves the
  // rotated direction.
  return 2.0 * r * (-(image_line.transpose() * K_inv_T) * skew(R * direction));
}

RotationSolution solve_rotation(const RotationProblem& problem, const Mat3& R_init,
                                const SolverConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<Eigen::Index>(problem.lines.size());
  if (n < 3) {
    throw CalibError(ErrorCode::InsufficientLines, "at least 3 line pairs required");
  }

  std::vector<Vec3> normals(n);
  std::vector<Vec3> dirs(n);
  Eigen::MatrixXd D(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& obs = problem.lines[i];
    const Vec3 m = problem.K_inv_T.transpose() * obs.image_line;
    if (m.norm() == 0.0 || obs.direction.norm() == 0.0) {
      throw CalibError(ErrorCode::InvalidLine, "line '" + obs.id + "' has a zero image line or direction");
    }
    normals[i] = m.normalized();
    dirs[i] = obs.direction.normalized();
    D.row(i) = dirs[i].transpose();
  }

  RotationSolution sol;
  {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(D);
    const auto& sv = svd.singularValues();
    sol.direction_span_ratio = sv(1) / sv(0);
    sol.degenerate = sol.direction_span_ratio < cfg.degeneracy_ratio;
  }

  auto evaluate = [&](const Mat3& R, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
    r.resize(n);
    if (J) J->resize(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vec3 Rv = R * dirs[i];
      r(i) = normals[i].dot(Rv);
      if (J) J->row(i) = -normals[i].transpose() * skew(Rv);
    }
  };
  auto retract = [](const Mat3& R, const Eigen::VectorXd& d) {
    return pose_retract(ExtrinsicPose(R, Vec3::Zero()), d.head<3>(), Vec3::Zero()).rotation();
  };

  auto lm = levenberg_marquardt(orthonormalize(R_init), evaluate, retract, cfg);
  sol.R = lm.state;
  sol.initial_cost = lm.cost_history.front();
  sol.final_cost = lm.cost;
  sol.iterations = lm.iterations;
  sol.converged = lm.converged;
  sol.cost_history = std::move(lm.cost_history);
  return sol;
}

TranslationSystem build_translation_system(std::span<const Correspondence> corrs, const Mat3& R,
                                           const Mat3& K) {
  const auto n = static_cast<Eigen::Index>(corrs.size());
  TranslationSystem sys;
  sys.A.resize(3 * n, 3);
  sys.b.resize(3 * n);
  sys.row_ids.reserve(3 * n);
  const auto lu = K.partialPivLu();
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& c = corrs[i];
    const Vec3 m = lu.solve(c.segment.line()).normalized();
    const Mat3 M = skew(m);
    sys.A.block<3, 3>(3 * i, 0) = M * skew(R * c.line.direction());
    sys.b.segment<3>(3 * i) = M * R * c.line.normal();
    for (int k = 0; k < 3; ++k) sys.row_ids.push_back(c.id);
  }
  return sys;
}

TranslationSolution solve_translation(const TranslationSystem& sys, double degeneracy_ratio) {
  if (sys.A.cols() != 3 || sys.A.rows() != sys.b.size()) {
    throw CalibError(ErrorCode::InvalidConfig, "translation system must be 3N x 3 with a 3N right-hand side");
  }
  if (sys.A.rows() < 9) {
    throw CalibError(ErrorCode::InsufficientLines, "at least 3 line pairs required");
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(sys.A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  TranslationSolution sol;
  sol.singular_ratio = sv(0) > 0.0 ? sv(2) / sv(0) : 0.0;
  sol.degenerate = sol.singular_ratio < degeneracy_ratio;
  sol.P = svd.solve(sys.b);
  sol.residual_norm = (sys.A * sol.P - sys.b).norm();
  return sol;
}

CalibrationResult solve_plk_calib(std::span<const Correspondence> corrs,
                                  const ExtrinsicPose& init, const Mat3& K,
                                  const SolverConfig& cfg) {
  cfg.validate();
  if (corrs.size() < 3) {
    throw CalibError(ErrorCode::InsufficientLines, "at least 3 line pairs required");
  }
  const RotationSolution rot =
      solve_rotation(RotationProblem::from_correspondences(corrs, K), init.rotation(), cfg);
  const TranslationSystem sys = build_translation_system(corrs, rot.R, K);
  const TranslationSolution trans = solve_translation(sys, cfg.degeneracy_ratio);

  CalibrationResult result;
  result.pose = ExtrinsicPose(rot.R, trans.P);
  result.iterations = rot.iterations;
  result.converged = rot.converged;
  result.cost_history = rot.cost_history;
  result.rotation_cost = rot.final_cost;
  result.translation_cost = trans.residual_norm * trans.residual_norm;
  result.degeneracy.rotation_degenerate = rot.degenerate;
  result.degeneracy.direction_span_ratio = rot.direction_span_ratio;
  result.degeneracy.translation_degenerate = trans.degenerate;
  result.degeneracy.translation_singular_ratio = trans.singular_ratio;

  method1::fill_reprojection(corrs, K, result);
  if (result.per_line_residuals.size() < corrs.size()) {
    result.warnings.push_back("some lines project to the line at infinity at the estimate");
  }
  return result;
}

}  // namespace plkcalib::method2
