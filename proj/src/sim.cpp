#include "plkcalib/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include "plkcalib/method1.hpp"
#include "plkcalib/method2.hpp"

namespace plkcalib::sim {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr int kMaxSceneAttempts = 20000;
constexpr int kMaxLineAttempts = 2000;

Vec3 random_unit(Rng& rng) {
  Vec3 d;
  do {
    d = Vec3(gaussian(rng, 1.0), gaussian(rng, 1.0), gaussian(rng, 1.0));
  } while (d.norm() < 1e-6);
  return d.normalized();
}

Vec3 random_unit_in_plane(Rng& rng, const Vec3& normal) {
  Vec3 d;
  do {
    d = random_unit(rng);
    d -= d.dot(normal) * normal;
  } while (d.norm() < 1e-3);
  return d.normalized();
}

/// Camera-frame placement helpers.
class Placement {
 public:
  explicit Placement(const SceneConfig& cfg) : cfg_(cfg) {}

  Vec3 ray(double u, double v) const {
    const auto& k = cfg_.intrinsics;
    return {(u - k.cu) / k.fu, (v - k.cv) / k.fv, 1.0};
  }

  Vec3 random_pixel_ray(Rng& rng) const {
    const double m = cfg_.image_margin_px;
    return ray(uniform(rng, m, cfg_.image_width - m), uniform(rng, m, cfg_.image_height - m));
  }

  Vec3 random_visible_point(Rng& rng, double zmin, double zmax) const {
    return uniform(rng, zmin, zmax) * random_pixel_ray(rng);
  }

  bool visible(const Vec3& p) const {
    if (p.z() < cfg_.min_depth_m || p.z() > cfg_.max_depth_m) return false;
    const Vec2 px = cfg_.intrinsics.project_point(p);
    const double m = cfg_.image_margin_px;
    return px.x() >= m && px.x() <= cfg_.image_width - m && px.y() >= m &&
           px.y() <= cfg_.image_height - m;
  }

  double pixel_length(const Vec3& a, const Vec3& b) const {
    return (cfg_.intrinsics.project_point(a) - cfg_.intrinsics.project_point(b)).norm();
  }

  bool acceptable_segment(const Vec3& a, const Vec3& b) const {
    return visible(a) && visible(b) && pixel_length(a, b) >= cfg_.min_pixel_length;
  }

 private:
  const SceneConfig& cfg_;
};

struct CamLine {
  Vec3 a;
  Vec3 b;
  Vec3 dir() const { return (b - a).normalized(); }
};

double undirected_angle_deg(const Vec3& d1, const Vec3& d2) {
  const double c = std::min(1.0, std::abs(d1.normalized().dot(d2.normalized())));
  return rad2deg(std::acos(c));
}

double perpendicular_separation(const CamLine& l, const Vec3& p) {
  return (p - l.a).cross(l.dir()).norm();
}

/// Smallest over largest eigenvalue of the endpoint scatter; zero for coplanar
/// point sets.
double planarity_ratio(const std::vector<CamLine>& lines) {
  Vec3 mean = Vec3::Zero();
  for (const auto& l : lines) mean += l.a + l.b;
  mean /= 2.0 * static_cast<double>(lines.size());
  Mat3 S = Mat3::Zero();
  for (const auto& l : lines) {
    S += (l.a - mean) * (l.a - mean).transpose();
    S += (l.b - mean) * (l.b - mean).transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(S);
  return es.eigenvalues()(0) / es.eigenvalues()(2);
}

double direction_span3(const std::vector<CamLine>& lines) {
  Eigen::MatrixXd D(lines.size(), 3);
  for (std::size_t i = 0; i < lines.size(); ++i) D.row(i) = lines[i].dir().transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(D);
  return svd.singularValues()(2) / svd.singularValues()(0);
}

struct Plane {
  Vec3 normal;
  double offset;  // normal . x = offset
};

Plane random_plane(Rng& rng, const SceneConfig& cfg, const Placement& place) {
  const double span = cfg.max_depth_m - cfg.min_depth_m;
  const Vec3 c = place.random_visible_point(rng, cfg.min_depth_m + 0.3 * span,
                                            cfg.max_depth_m - 0.3 * span);
  Vec3 n;
  do {
    n = random_unit(rng);
  } while (std::abs(n.dot(c.normalized())) < 0.5);
  return {n, n.dot(c)};
}

std::optional<Vec3> random_point_on_plane(Rng& rng, const Plane& plane, const Placement& place) {
  const Vec3 ray = place.random_pixel_ray(rng);
  const double denom = plane.normal.dot(ray);
  if (std::abs(denom) < 1e-9) return std::nullopt;
  const double t = plane.offset / denom;
  if (t <= 0.0) return std::nullopt;
  const Vec3 p = t * ray;
  if (!place.visible(p)) return std::nullopt;
  return p;
}

bool angle_ok(const std::vector<CamLine>& lines, const Vec3& d, double min_deg) {
  return std::all_of(lines.begin(), lines.end(), [&](const CamLine& l) {
    return undirected_angle_deg(l.dir(), d) >= min_deg;
  });
}

bool separation_ok(const std::vector<CamLine>& lines, const Vec3& p, double min_sep) {
  return std::all_of(lines.begin(), lines.end(), [&](const CamLine& l) {
    return perpendicular_separation(l, p) >= min_sep;
  });
}

std::optional<std::vector<CamLine>> try_scene(const Scenario& sc, const SceneConfig& cfg,
                                              const Placement& place, Rng& rng) {
  std::vector<CamLine> lines;
  const bool planar = sc.kind == ScenarioKind::Coplanar || sc.kind == ScenarioKind::CoplanarParallel;
  const bool parallel = sc.kind == ScenarioKind::Parallel || sc.kind == ScenarioKind::CoplanarParallel;

  std::optional<Plane> plane;
  if (planar) plane = random_plane(rng, cfg, place);

  Vec3 common_dir = Vec3::Zero();
  if (parallel) common_dir = planar ? random_unit_in_plane(rng, plane->normal) : random_unit(rng);

  for (int i = 0; i < sc.line_count; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxLineAttempts && !placed; ++attempt) {
      Vec3 a;
      if (planar) {
        const auto p = random_point_on_plane(rng, *plane, place);
        if (!p) continue;
        a = *p;
      } else {
        a = place.random_visible_point(rng, cfg.min_depth_m, cfg.max_depth_m);
      }
      Vec3 d;
      if (parallel) {
        d = common_dir;
      } else {
        d = planar ? random_unit_in_plane(rng, plane->normal) : random_unit(rng);
      }
      const double len = uniform(rng, 0.5, 1.5) * sc.scene_scale;
      const Vec3 b = a + len * d;
      if (!place.acceptable_segment(a, b)) continue;
      if (!parallel && !angle_ok(lines, d, cfg.min_pair_angle_deg)) continue;
      if (!separation_ok(lines, a, cfg.min_line_separation_m)) continue;
      lines.push_back({a, b});
      placed = true;
    }
    if (!placed) return std::nullopt;
  }

  constexpr double kPlanarityFloor = 1e-3;
  switch (sc.kind) {
    case ScenarioKind::NonParallelNonCoplanar:
      if (sc.line_count >= 3 && direction_span3(lines) < 0.1) return std::nullopt;
      if (planarity_ratio(lines) < kPlanarityFloor) return std::nullopt;
      break;
    case ScenarioKind::Parallel:
      if (planarity_ratio(lines) < kPlanarityFloor) return std::nullopt;
      break;
    case ScenarioKind::Coplanar:
    case ScenarioKind::CoplanarParallel:
      break;
  }
  return lines;
}

}  // namespace

Rng stream_rng(std::uint64_t seed, std::uint64_t stream) {
  return Rng(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL)));
}

double gaussian(Rng& rng, double sigma) {
  if (sigma == 0.0) return 0.0;
  return boost::random::normal_distribution<double>(0.0, sigma)(rng);
}

double uniform(Rng& rng, double lo, double hi) {
  return boost::random::uniform_real_distribution<double>(lo, hi)(rng);
}

std::string_view scenario_label(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::NonParallelNonCoplanar: return "a";
    case ScenarioKind::Coplanar: return "b";
    case ScenarioKind::Parallel: return "c";
    case ScenarioKind::CoplanarParallel: return "d";
  }
  return "?";
}

std::optional<ScenarioKind> parse_scenario(std::string_view label) {
  if (label == "a") return ScenarioKind::NonParallelNonCoplanar;
  if (label == "b") return ScenarioKind::Coplanar;
  if (label == "c") return ScenarioKind::Parallel;
  if (label == "d") return ScenarioKind::CoplanarParallel;
  return std::nullopt;
}

std::string_view method_label(Method m) {
  return m == Method::Method1 ? "method1" : "plk";
}

std::optional<Method> parse_method(std::string_view label) {
  if (label == "method1") return Method::Method1;
  if (label == "plk") return Method::PlkCalib;
  return std::nullopt;
}

ExtrinsicPose SceneConfig::default_ground_truth() {
  Mat3 axes;
  axes << 0.0, -1.0, 0.0,
          0.0, 0.0, -1.0,
          1.0, 0.0, 0.0;
  const Mat3 R = exp_so3(Vec3(0.02, -0.015, 0.03)) * axes;
  return ExtrinsicPose(orthonormalize(R), Vec3(0.05, -0.10, 0.08));
}

std::vector<SceneLine> generate_scene(const Scenario& scenario, std::uint64_t seed,
                                      const SceneConfig& cfg) {
  if (scenario.line_count < 3) {
    throw CalibError(ErrorCode::InvalidConfig, "scenario needs at least 3 lines");
  }
  if (!(scenario.scene_scale > 0.0)) {
    throw CalibError(ErrorCode::InvalidConfig, "scene_scale must be positive");
  }
  cfg.intrinsics.validate();
  Rng rng = stream_rng(seed, 0);
  const Placement place(cfg);
  const ExtrinsicPose to_lidar = cfg.ground_truth.inverse();

  for (int attempt = 0; attempt < kMaxSceneAttempts; ++attempt) {
    const auto cam_lines = try_scene(scenario, cfg, place, rng);
    if (!cam_lines) continue;
    std::vector<SceneLine> out;
    out.reserve(cam_lines->size());
    for (const auto& l : *cam_lines) {
      const Vec3 p1 = to_lidar.transform_point(l.a);
      const Vec3 p2 = to_lidar.transform_point(l.b);
      out.push_back({p1, p2, PluckerLine::from_endpoints(p1, p2)});
    }
    const bool nondegenerate = scenario.kind == ScenarioKind::NonParallelNonCoplanar ||
                               scenario.kind == ScenarioKind::Coplanar;
    if (nondegenerate &&
        (rotation_sensitivity_deg(out, cfg) > cfg.max_rotation_sensitivity_deg ||
         translation_sensitivity_m(out, cfg) > cfg.max_translation_sensitivity_m)) {
      continue;
    }
    return out;
  }
  throw CalibError(ErrorCode::InvalidConfig, "could not place lines for the requested scenario");
}

namespace {

std::optional<Eigen::Matrix<double, 6, 6>> first_order_covariance(
    std::span<const SceneLine> lines, const SceneConfig& cfg) {
  const Mat3 K = line_projection_matrix(cfg.intrinsics);
  const auto n = static_cast<Eigen::Index>(lines.size());
  Eigen::MatrixXd J(2 * n, 6);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec2 s = cfg.intrinsics.project_point(cfg.ground_truth.transform_point(lines[i].p1));
    const Vec2 e = cfg.intrinsics.project_point(cfg.ground_truth.transform_point(lines[i].p2));
    const Correspondence c{lines[i].line, LineSegment2D(s, e), {}};
    J.block<2, 6>(2 * i, 0) = method1::jacobian(c, cfg.ground_truth, K);
  }
  const Eigen::Matrix<double, 6, 6> H = J.transpose() * J;
  Eigen::JacobiSVD<Eigen::Matrix<double, 6, 6>> svd(H);
  if (svd.singularValues()(5) <= 1e-12 * svd.singularValues()(0)) return std::nullopt;
  return Eigen::Matrix<double, 6, 6>(H.inverse());
}

}  // namespace

double rotation_sensitivity_deg(std::span<const SceneLine> lines, const SceneConfig& cfg) {
  const auto cov = first_order_covariance(lines, cfg);
  if (!cov) return std::numeric_limits<double>::infinity();
  return rad2deg(std::sqrt(cov->topLeftCorner<3, 3>().trace()));
}

double translation_sensitivity_m(std::span<const SceneLine> lines, const SceneConfig& cfg) {
  const auto cov = first_order_covariance(lines, cfg);
  if (!cov) return std::numeric_limits<double>::infinity();
  return std::sqrt(cov->bottomRightCorner<3, 3>().trace());
}

std::vector<Correspondence> observe(std::span<const SceneLine> lines, const ExtrinsicPose& gt,
                                    const CameraIntrinsics& intr, double sigma, Rng& rng) {
  std::vector<Correspondence> out;
  out.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    Vec2 s = intr.project_point(gt.transform_point(lines[i].p1));
    Vec2 e = intr.project_point(gt.transform_point(lines[i].p2));
    s.x() += gaussian(rng, sigma);
    s.y() += gaussian(rng, sigma);
    e.x() += gaussian(rng, sigma);
    e.y() += gaussian(rng, sigma);
    out.push_back({lines[i].line, LineSegment2D(s, e), "line" + std::to_string(i)});
  }
  return out;
}

ExtrinsicPose perturb_initial(const ExtrinsicPose& gt, double rot_deg_per_axis,
                              double trans_m_per_axis) {
  return pose_retract(gt, Vec3::Constant(deg2rad(rot_deg_per_axis)),
                      Vec3::Constant(trans_m_per_axis));
}

void TrialConfig::validate() const {
  if (!(pixel_noise_sigma >= 0.0) || !std::isfinite(pixel_noise_sigma)) {
    throw CalibError(ErrorCode::InvalidConfig, "pixel_noise_sigma must be >= 0");
  }
  if (trials < 1) {
    throw CalibError(ErrorCode::InvalidConfig, "trials must be >= 1");
  }
}

ErrorStats summarize(std::span<const double> values) {
  ErrorStats s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double acc = 0.0;
    for (double v : values) acc += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(acc / (n - 1.0));
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  s.median = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  return s;
}

TrialReport run_monte_carlo(const Scenario& scenario, const TrialConfig& trial_cfg, Method method,
                            const SceneConfig& scene_cfg, const SolverConfig& solver_cfg) {
  trial_cfg.validate();
  solver_cfg.validate();
  const auto scene = generate_scene(scenario, trial_cfg.seed, scene_cfg);
  const ExtrinsicPose& gt = scene_cfg.ground_truth;
  const Mat3 K = line_projection_matrix(scene_cfg.intrinsics);
  const ExtrinsicPose init =
      perturb_initial(gt, trial_cfg.init_rot_offset_deg, trial_cfg.init_trans_offset_m);

  TrialReport report;
  report.scenario = scenario.kind;
  report.method = method;
  report.trials.resize(trial_cfg.trials);

  // Trials are independent; results land at their own index.
  for (int k = 0; k < trial_cfg.trials; ++k) {
    TrialOutcome& t = report.trials[k];
    t.trial = k;
    try {
      Rng rng = stream_rng(trial_cfg.seed, static_cast<std::uint64_t>(k) + 1);
      const auto corrs = observe(scene, gt, scene_cfg.intrinsics, trial_cfg.pixel_noise_sigma, rng);
      const CalibrationResult res = method == Method::Method1
                                        ? method1::solve(corrs, init, K, solver_cfg)
                                        : method2::solve_plk_calib(corrs, init, K, solver_cfg);
      const PoseError err = pose_error(res.pose, gt);
      t.rot_err_deg = err.rot_err_deg;
      t.trans_err_m = err.trans_err_m;
      t.converged = res.converged;
      t.degenerate = res.degeneracy.degenerate();
    } catch (const CalibError& e) {
      t.completed = false;
      t.failure = e.what();
      t.rot_err_deg = std::numeric_limits<double>::quiet_NaN();
      t.trans_err_m = std::numeric_limits<double>::quiet_NaN();
    }
  }

  std::vector<double> rot;
  std::vector<double> trans;
  for (const auto& t : report.trials) {
    if (!t.completed) continue;
    ++report.completed;
    if (t.degenerate) ++report.degenerate_count;
    rot.push_back(t.rot_err_deg);
    trans.push_back(t.trans_err_m);
  }
  report.rotation = summarize(rot);
  report.translation = summarize(trans);
  return report;
}

}  // namespace plkcalib::sim
