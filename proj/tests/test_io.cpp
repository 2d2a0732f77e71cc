#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "plkcalib/io.hpp"
#include "plkcalib/method2.hpp"
#include "plkcalib/sim.hpp"

namespace plkcalib::io {
namespace {

CalibrationInput sample_input(std::uint64_t seed = 1, double sigma = 1.0) {
  const sim::SceneConfig cfg;
  sim::Scenario sc;
  sc.line_count = 4;
  const auto lines = sim::generate_scene(sc, seed, cfg);
  auto rng = sim::stream_rng(seed, 1);
  const auto corrs = sim::observe(lines, cfg.ground_truth, cfg.intrinsics, sigma, rng);
  CalibrationInput in;
  in.intrinsics = cfg.intrinsics;
  in.initial_pose = sim::perturb_initial(cfg.ground_truth, 5.0, 0.5);
  in.ground_truth = cfg.ground_truth;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    in.pairs.push_back({corrs[i].id, lines[i].p1, lines[i].p2, corrs[i].segment});
  }
  return in;
}

void expect_same_pose(const ExtrinsicPose& a, const ExtrinsicPose& b) {
  EXPECT_EQ(a.rotation(), b.rotation());
  EXPECT_EQ(a.translation(), b.translation());
}

bool same_double(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

TEST(CalibrationInputFile, RoundTripIsExact) {
  const auto in = sample_input();
  const auto back = parse_calibration_input(write_calibration_input(in));
  EXPECT_EQ(back.intrinsics, in.intrinsics);
  expect_same_pose(back.initial_pose, in.initial_pose);
  ASSERT_TRUE(back.ground_truth);
  expect_same_pose(*back.ground_truth, *in.ground_truth);
  EXPECT_EQ(back.pairs, in.pairs);
  EXPECT_TRUE(back.warnings.empty());
}

TEST(CalibrationInputFile, AcceptsQuaternion) {
  const std::string text = R"({
    "schema_version": 1,
    "intrinsics": {"fu": 500, "fv": 500, "cu": 320, "cv": 240},
    "initial_pose": {"quaternion_wxyz": [0.7071067811865476, 0.7071067811865476, 0, 0],
                     "translation_m": [0.1, 0.2, 0.3]},
    "correspondences": [
      {"p1": [1, 0, 5], "p2": [1, 1, 5], "u_s": 1, "v_s": 2, "u_e": 3, "v_e": 4},
      {"p1": [0, 0, 5], "p2": [1, 0, 6], "u_s": 5, "v_s": 2, "u_e": 3, "v_e": 9},
      {"p1": [2, 1, 5], "p2": [1, 3, 4], "u_s": 1, "v_s": 7, "u_e": 3, "v_e": 4}
    ]
  })";
  const auto in = parse_calibration_input(text);
  Mat3 expected;
  expected << 1, 0, 0, 0, 0, -1, 0, 1, 0;
  EXPECT_LT((in.initial_pose.rotation() - expected).norm(), 1e-12);
  EXPECT_EQ(in.pairs.size(), 3u);
  EXPECT_EQ(in.pairs[1].id, "line1");
  EXPECT_FALSE(in.ground_truth);
}

TEST(SanitizeRotation, Thresholds) {
  std::vector<std::string> warnings;
  const Mat3 R = exp_so3(Vec3(0.1, -0.2, 0.3));
  EXPECT_EQ(sanitize_rotation(R, "r", warnings), R);
  EXPECT_TRUE(warnings.empty());

  Mat3 slightly_off = R;
  slightly_off(0, 0) += 1e-8;
  const Mat3 quiet = sanitize_rotation(slightly_off, "r", warnings);
  EXPECT_TRUE(warnings.empty());
  EXPECT_LT(rotation_defect(quiet), 1e-12);

  Mat3 off = R;
  off(0, 0) += 1e-4;
  const Mat3 fixed = sanitize_rotation(off, "r", warnings);
  EXPECT_EQ(warnings.size(), 1u);
  EXPECT_LT(rotation_defect(fixed), 1e-12);

  Mat3 bad = R;
  bad(0, 0) += 1e-2;
  EXPECT_THROW(sanitize_rotation(bad, "r", warnings), CalibError);
  EXPECT_THROW(sanitize_rotation(-R, "r", warnings), CalibError);
}

TEST(CalibrationInputFile, ValidationErrorsNameTheLine) {
  auto in = sample_input();
  in.pairs[0].p2 = in.pairs[0].p1;
  try {
    parse_calibration_input(write_calibration_input(in));
    FAIL() << "expected DegenerateEndpoints";
  } catch (const CalibError& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateEndpoints);
    EXPECT_NE(std::string(e.what()).find("line0"), std::string::npos);
  }
}

TEST(CalibrationInputFile, RequiresThreeCorrespondences) {
  auto in = sample_input();
  in.pairs.erase(in.pairs.begin() + 2, in.pairs.end());
  try {
    parse_calibration_input(write_calibration_input(in));
    FAIL() << "expected InsufficientLines";
  } catch (const CalibError& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientLines);
    EXPECT_STREQ(e.what(), "at least 3 line pairs required");
  }
}

TEST(CalibrationInputFile, MalformedInputs) {
  EXPECT_THROW(parse_calibration_input("{"), CalibError);
  EXPECT_THROW(parse_calibration_input("[]"), CalibError);
  EXPECT_THROW(parse_calibration_input(R"({"schema_version": 2})"), CalibError);
  EXPECT_THROW(parse_calibration_input(
                   R"({"intrinsics": {"fu": -1, "fv": 1, "cu": 0, "cv": 0}})"),
               CalibError);
}

TEST(ReportFile, RoundTripIsExact) {
  const auto in = sample_input(2);
  const auto res = method2::solve_plk_calib(in.correspondences(), in.initial_pose,
                                            line_projection_matrix(in.intrinsics));
  Report r = make_report("plk", res, in.ground_truth, 0.00123);
  r.warnings.push_back("note");
  const Report back = parse_report(write_report(r));
  EXPECT_EQ(back.method, r.method);
  expect_same_pose(back.pose, r.pose);
  ASSERT_TRUE(back.error_vs_ground_truth);
  EXPECT_EQ(back.error_vs_ground_truth->rot_err_deg, r.error_vs_ground_truth->rot_err_deg);
  EXPECT_EQ(back.error_vs_ground_truth->trans_err_m, r.error_vs_ground_truth->trans_err_m);
  EXPECT_EQ(back.residual_ids, r.residual_ids);
  EXPECT_EQ(back.residuals_px, r.residuals_px);
  EXPECT_EQ(back.degeneracy.degenerate(), r.degeneracy.degenerate());
  EXPECT_TRUE(same_double(back.degeneracy.jacobian_singular_ratio, r.degeneracy.jacobian_singular_ratio));
  EXPECT_TRUE(same_double(back.degeneracy.direction_span_ratio, r.degeneracy.direction_span_ratio));
  EXPECT_TRUE(same_double(back.degeneracy.translation_singular_ratio,
                          r.degeneracy.translation_singular_ratio));
  EXPECT_EQ(back.iterations, r.iterations);
  EXPECT_EQ(back.converged, r.converged);
  EXPECT_EQ(back.final_cost_px2, r.final_cost_px2);
  EXPECT_TRUE(same_double(back.rotation_cost, r.rotation_cost));
  EXPECT_TRUE(same_double(back.translation_cost, r.translation_cost));
  EXPECT_EQ(back.wall_time_s, r.wall_time_s);
  EXPECT_EQ(back.warnings, r.warnings);
  EXPECT_EQ(write_report(back), write_report(r));
}

TEST(ReportFile, KeysCarryUnits) {
  const auto in = sample_input(3);
  const auto res = method2::solve_plk_calib(in.correspondences(), in.initial_pose,
                                            line_projection_matrix(in.intrinsics));
  const std::string text = write_report(make_report("plk", res, in.ground_truth, 0.0));
  for (const char* key : {"translation_m", "rot_err_deg", "trans_err_m", "start_px", "end_px",
                          "final_cost_px2", "wall_time_s"}) {
    EXPECT_NE(text.find(key), std::string::npos) << key;
  }
}

TEST(SegmentFile, RoundTripIsExact) {
  const std::vector<LineSegment2D> segs{{{0.1, 0.2}, {300.0 / 7.0, 1e-3}},
                                        {{-5.5, 1e10}, {2.0 / 3.0, 4.0}}};
  std::stringstream ss;
  write_segments(ss, segs);
  EXPECT_EQ(read_segments(ss), segs);
}

TEST(SegmentFile, CommentsAndBlankLines) {
  std::istringstream ss("# header\n\n1 2 3 4  # trailing\n   \n5 6 7 8\n");
  const auto segs = read_segments(ss);
  ASSERT_EQ(segs.size(), 2u);
  EXPECT_EQ(segs[1].end(), Vec2(7, 8));
}

TEST(SegmentFile, MalformedRowNamesLine) {
  for (const char* text : {"1 2 3 4\n1 2 3\n", "1 2 3 4\n1 2 x 4\n", "1 2 3 4\n5 5 5 5\n",
                           "1 2 3 4\n1 2 3 4 5\n", "1 2 3 4\n1 2 nan 4\n"}) {
    std::istringstream ss(text);
    try {
      read_segments(ss);
      FAIL() << "expected a parse error for: " << text;
    } catch (const CalibError& e) {
      EXPECT_EQ(e.code(), ErrorCode::Parse);
      EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
    }
  }
}

TEST(TrialCsv, HeaderAndRows) {
  sim::TrialReport rep;
  rep.scenario = sim::ScenarioKind::Coplanar;
  rep.method = sim::Method::Method1;
  rep.trials.push_back({0, 0.5, 0.25, true, false, true, {}});
  rep.trials.push_back({1, 1.0, 2.0, false, true, true, {}});
  std::ostringstream ss;
  write_trials_csv(ss, std::span<const sim::TrialReport>(&rep, 1));
  EXPECT_EQ(ss.str(),
            "scenario,method,trial,rot_err_deg,trans_err_m,converged,degenerate\n"
            "b,method1,0,0.5,0.25,1,0\n"
            "b,method1,1,1,2,0,1\n");
}

}  // namespace
}  // namespace plkcalib::io
