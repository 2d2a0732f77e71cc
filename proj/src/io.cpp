#include "plkcalib/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <Eigen/LU>
#include <fmt/format.h>
#include <json.hpp>

namespace plkcalib::io {
namespace {

using nlohmann::json;

[[noreturn]] void parse_error(const std::string& msg) { throw CalibError(ErrorCode::Parse, msg); }

double number(const json& j, const char* key, const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end()) parse_error(where + ": missing '" + key + "'");
  if (it->is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!it->is_number()) parse_error(where + ": '" + key + "' must be a number");
  return it->get<double>();
}

template <int N>
Eigen::Matrix<double, N, 1> vec(const json& j, const char* key, const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end()) parse_error(where + ": missing '" + key + "'");
  if (!it->is_array() || it->size() != N) {
    parse_error(fmt::format("{}: '{}' must be an array of {} numbers", where, key, N));
  }
  Eigen::Matrix<double, N, 1> out;
  for (int i = 0; i < N; ++i) {
    const auto& e = (*it)[i];
    if (e.is_null()) {
      out(i) = std::numeric_limits<double>::quiet_NaN();
    } else if (e.is_number()) {
      out(i) = e.get<double>();
    } else {
      parse_error(fmt::format("{}: '{}' must be an array of {} numbers", where, key, N));
    }
  }
  return out;
}

json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json rotation_json(const Mat3& R) {
  json a = json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) a.push_back(R(r, c));
  }
  return a;
}

json pose_json(const ExtrinsicPose& pose) {
  return {{"rotation_matrix", rotation_json(pose.rotation())},
          {"translation_m", to_json(pose.translation())}};
}

ExtrinsicPose parse_pose(const json& j, const std::string& where,
                         std::vector<std::string>& warnings) {
  if (!j.is_object()) parse_error(where + " must be an object");
  Mat3 R;
  if (j.contains("rotation_matrix")) {
    const Eigen::Matrix<double, 9, 1> m = vec<9>(j, "rotation_matrix", where);
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) R(r, c) = m(3 * r + c);
    }
  } else if (j.contains("quaternion_wxyz")) {
    const Eigen::Vector4d q = vec<4>(j, "quaternion_wxyz", where);
    if (!q.allFinite() || q.norm() == 0.0) {
      throw CalibError(ErrorCode::InvalidPose, where + ": quaternion must be finite and nonzero");
    }
    const double defect = std::abs(q.norm() - 1.0);
    if (defect > kRotationRejectDefect) {
      throw CalibError(ErrorCode::InvalidPose,
                       fmt::format("{}: quaternion norm defect {:.3g} exceeds {:g}", where, defect,
                                   kRotationRejectDefect));
    }
    if (defect > kRotationWarnDefect) {
      warnings.push_back(fmt::format("{}: quaternion renormalized (norm defect {:.3g})", where, defect));
    }
    R = Eigen::Quaterniond(q(0), q(1), q(2), q(3)).normalized().toRotationMatrix();
  } else {
    parse_error(where + ": needs 'rotation_matrix' or 'quaternion_wxyz'");
  }
  const Vec3 P = vec<3>(j, "translation_m", where);
  if (!P.allFinite()) throw CalibError(ErrorCode::InvalidPose, where + ": translation must be finite");
  return ExtrinsicPose(sanitize_rotation(R, where, warnings), P);
}

ExtrinsicPose parse_report_pose(const json& j) {
  std::vector<std::string> ignored;
  return parse_pose(j, "pose", ignored);
}

}  // namespace

std::vector<Correspondence> CalibrationInput::correspondences() const {
  std::vector<Correspondence> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    out.push_back({PluckerLine::from_endpoints(p.p1, p.p2), p.segment, p.id});
  }
  return out;
}

double rotation_defect(const Mat3& R) {
  return (R.transpose() * R - Mat3::Identity()).norm() + std::abs(R.determinant() - 1.0);
}

Mat3 sanitize_rotation(const Mat3& R, std::string_view what, std::vector<std::string>& warnings) {
  if (!R.allFinite()) {
    throw CalibError(ErrorCode::InvalidPose, std::string(what) + ": rotation must be finite");
  }
  const double defect = rotation_defect(R);
  if (defect <= 1e-9) return R;
  if (defect > kRotationRejectDefect || R.determinant() <= 0.0) {
    throw CalibError(ErrorCode::InvalidPose,
                     fmt::format("{}: rotation defect {:.3g} exceeds {:g}", what, defect,
                                 kRotationRejectDefect));
  }
  if (defect > kRotationWarnDefect) {
    warnings.push_back(fmt::format("{}: rotation orthonormalized (defect {:.3g})", what, defect));
  }
  return orthonormalize(R);
}

CalibrationInput parse_calibration_input(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    parse_error(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) parse_error("calibration input must be a JSON object");
  if (j.contains("schema_version") && j["schema_version"] != kSchemaVersion) {
    parse_error(fmt::format("unsupported schema_version {}", j["schema_version"].dump()));
  }

  CalibrationInput in;
  if (!j.contains("intrinsics")) parse_error("missing 'intrinsics'");
  const json& k = j["intrinsics"];
  if (!k.is_object()) parse_error("'intrinsics' must be an object");
  in.intrinsics = {number(k, "fu", "intrinsics"), number(k, "fv", "intrinsics"),
                   number(k, "cu", "intrinsics"), number(k, "cv", "intrinsics")};
  in.intrinsics.validate();

  if (!j.contains("initial_pose")) parse_error("missing 'initial_pose'");
  in.initial_pose = parse_pose(j["initial_pose"], "initial_pose", in.warnings);
  if (j.contains("ground_truth") && !j["ground_truth"].is_null()) {
    in.ground_truth = parse_pose(j["ground_truth"], "ground_truth", in.warnings);
  }

  if (!j.contains("correspondences") || !j["correspondences"].is_array()) {
    parse_error("missing 'correspondences' array");
  }
  const json& cs = j["correspondences"];
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const json& c = cs[i];
    if (!c.is_object()) parse_error(fmt::format("correspondence {} must be an object", i));
    std::string id = fmt::format("line{}", i);
    if (c.contains("id")) {
      if (!c["id"].is_string()) parse_error(fmt::format("correspondence {}: 'id' must be a string", i));
      id = c["id"].get<std::string>();
    }
    const std::string where = "correspondence '" + id + "'";
    const Vec3 p1 = vec<3>(c, "p1", where);
    const Vec3 p2 = vec<3>(c, "p2", where);
    const Vec2 s(number(c, "u_s", where), number(c, "v_s", where));
    const Vec2 e(number(c, "u_e", where), number(c, "v_e", where));
    if (!p1.allFinite() || !p2.allFinite()) {
      throw CalibError(ErrorCode::InvalidLine, where + ": endpoints must be finite");
    }
    try {
      PluckerLine::from_endpoints(p1, p2);
      in.pairs.push_back({id, p1, p2, LineSegment2D(s, e)});
    } catch (const CalibError& err) {
      throw CalibError(err.code(), where + ": " + err.what());
    }
  }
  if (in.pairs.size() < 3) {
    throw CalibError(ErrorCode::InsufficientLines, "at least 3 line pairs required");
  }
  return in;
}

CalibrationInput load_calibration_input(const std::string& path) {
  return parse_calibration_input(read_file(path));
}

std::string write_calibration_input(const CalibrationInput& in) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["intrinsics"] = {{"fu", in.intrinsics.fu},
                     {"fv", in.intrinsics.fv},
                     {"cu", in.intrinsics.cu},
                     {"cv", in.intrinsics.cv}};
  j["initial_pose"] = pose_json(in.initial_pose);
  if (in.ground_truth) j["ground_truth"] = pose_json(*in.ground_truth);
  json cs = json::array();
  for (const auto& p : in.pairs) {
    cs.push_back({{"id", p.id},
                  {"p1", to_json(p.p1)},
                  {"p2", to_json(p.p2)},
                  {"u_s", p.segment.start().x()},
                  {"v_s", p.segment.start().y()},
                  {"u_e", p.segment.end().x()},
                  {"v_e", p.segment.end().y()}});
  }
  j["correspondences"] = std::move(cs);
  return j.dump(2) + "\n";
}

Report make_report(std::string method, const CalibrationResult& result,
                   const std::optional<ExtrinsicPose>& ground_truth, double wall_time_s) {
  Report r;
  r.method = std::move(method);
  r.pose = result.pose;
  if (ground_truth) r.error_vs_ground_truth = pose_error(result.pose, *ground_truth);
  r.residual_ids = result.residual_ids;
  r.residuals_px = result.per_line_residuals;
  r.degeneracy = result.degeneracy;
  r.iterations = result.iterations;
  r.converged = result.converged;
  r.final_cost_px2 = result.final_cost;
  r.rotation_cost = result.rotation_cost;
  r.translation_cost = result.translation_cost;
  r.wall_time_s = wall_time_s;
  r.warnings = result.warnings;
  return r;
}

std::string write_report(const Report& report) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["method"] = report.method;
  j["pose"] = pose_json(report.pose);
  const Eigen::Quaterniond q(report.pose.rotation());
  j["pose"]["quaternion_wxyz"] = json::array({q.w(), q.x(), q.y(), q.z()});
  if (report.error_vs_ground_truth) {
    j["error_vs_ground_truth"] = {{"rot_err_deg", report.error_vs_ground_truth->rot_err_deg},
                                  {"trans_err_m", report.error_vs_ground_truth->trans_err_m}};
  }
  json res = json::array();
  for (std::size_t i = 0; i < report.residuals_px.size(); ++i) {
    res.push_back({{"id", report.residual_ids.at(i)},
                   {"start_px", report.residuals_px[i].x()},
                   {"end_px", report.residuals_px[i].y()}});
  }
  j["residuals"] = std::move(res);
  const auto& d = report.degeneracy;
  j["degeneracy"] = {{"degenerate", d.degenerate()},
                     {"jacobian_degenerate", d.jacobian_degenerate},
                     {"rotation_degenerate", d.rotation_degenerate},
                     {"translation_degenerate", d.translation_degenerate},
                     {"jacobian_singular_ratio", d.jacobian_singular_ratio},
                     {"direction_span_ratio", d.direction_span_ratio},
                     {"translation_singular_ratio", d.translation_singular_ratio}};
  j["iterations"] = report.iterations;
  j["converged"] = report.converged;
  j["final_cost_px2"] = report.final_cost_px2;
  j["rotation_cost"] = report.rotation_cost;
  j["translation_cost_m2"] = report.translation_cost;
  j["wall_time_s"] = report.wall_time_s;
  j["warnings"] = report.warnings;
  return j.dump(2) + "\n";
}

Report parse_report(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    parse_error(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) parse_error("report must be a JSON object");
  Report r;
  try {
    r.method = j.at("method").get<std::string>();
    r.pose = parse_report_pose(j.at("pose"));
    if (j.contains("error_vs_ground_truth")) {
      const json& e = j["error_vs_ground_truth"];
      r.error_vs_ground_truth =
          PoseError{number(e, "rot_err_deg", "error_vs_ground_truth"),
                    number(e, "trans_err_m", "error_vs_ground_truth")};
    }
    for (const json& e : j.at("residuals")) {
      r.residual_ids.push_back(e.at("id").get<std::string>());
      r.residuals_px.emplace_back(number(e, "start_px", "residuals"), number(e, "end_px", "residuals"));
    }
    const json& d = j.at("degeneracy");
    r.degeneracy.jacobian_degenerate = d.at("jacobian_degenerate").get<bool>();
    r.degeneracy.rotation_degenerate = d.at("rotation_degenerate").get<bool>();
    r.degeneracy.translation_degenerate = d.at("translation_degenerate").get<bool>();
    r.degeneracy.jacobian_singular_ratio = number(d, "jacobian_singular_ratio", "degeneracy");
    r.degeneracy.direction_span_ratio = number(d, "direction_span_ratio", "degeneracy");
    r.degeneracy.translation_singular_ratio = number(d, "translation_singular_ratio", "degeneracy");
    r.iterations = j.at("iterations").get<int>();
    r.converged = j.at("converged").get<bool>();
    r.final_cost_px2 = number(j, "final_cost_px2", "report");
    r.rotation_cost = number(j, "rotation_cost", "report");
    r.translation_cost = number(j, "translation_cost_m2", "report");
    r.wall_time_s = number(j, "wall_time_s", "report");
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    parse_error(std::string("malformed report: ") + e.what());
  }
  return r;
}

std::vector<LineSegment2D> read_segments(std::istream& in) {
  std::vector<LineSegment2D> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    std::vector<double> vals;
    std::string tok;
    while (ss >> tok) {
      double v = 0.0;
      const char* first = tok.data();
      const char* last = first + tok.size();
      const auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc{} || ptr != last || !std::isfinite(v)) {
        parse_error(fmt::format("line {}: '{}' is not a finite number", lineno, tok));
      }
      vals.push_back(v);
    }
    if (vals.empty()) continue;
    if (vals.size() != 4) {
      parse_error(fmt::format("line {}: expected 4 values 'u_s v_s u_e v_e', got {}", lineno,
                              vals.size()));
    }
    try {
      out.emplace_back(Vec2(vals[0], vals[1]), Vec2(vals[2], vals[3]));
    } catch (const CalibError& e) {
      parse_error(fmt::format("line {}: {}", lineno, e.what()));
    }
  }
  return out;
}

void write_segments(std::ostream& out, std::span<const LineSegment2D> segments) {
  out << "# u_s_px v_s_px u_e_px v_e_px\n";
  for (const auto& s : segments) {
    out << fmt::format("{:.17g} {:.17g} {:.17g} {:.17g}\n", s.start().x(), s.start().y(),
                       s.end().x(), s.end().y());
  }
}

void write_trials_csv(std::ostream& out, std::span<const sim::TrialReport> reports) {
  out << kTrialCsvHeader << '\n';
  for (const auto& rep : reports) {
    for (const auto& t : rep.trials) {
      out << fmt::format("{},{},{},{:.17g},{:.17g},{},{}\n", sim::scenario_label(rep.scenario),
                         sim::method_label(rep.method), t.trial, t.rot_err_deg, t.trans_err_m,
                         t.converged ? 1 : 0, t.degenerate ? 1 : 0);
    }
  }
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) parse_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace plkcalib::io
