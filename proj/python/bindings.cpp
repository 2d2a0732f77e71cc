#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "plkcalib/calibration.hpp"
#include "plkcalib/geometry.hpp"
#include "plkcalib/io.hpp"
#include "plkcalib/method1.hpp"
#include "plkcalib/method2.hpp"
#include "plkcalib/preprocess.hpp"
#include "plkcalib/sim.hpp"

namespace py = pybind11;
using namespace plkcalib;

PYBIND11_MODULE(_core, m) {
  m.doc() = "LiDAR-camera extrinsic calibration from Plücker line correspondences";

  py::register_exception<CalibError>(m, "CalibError", PyExc_ValueError);

  py::class_<PluckerLine>(m, "PluckerLine")
      .def(py::init<const Vec3&, const Vec3&>(), py::arg("normal"), py::arg("direction"))
      .def_static("from_endpoints", &PluckerLine::from_endpoints, py::arg("p1"), py::arg("p2"),
                  py::arg("eps") = kDegenerateEndpointEps)
      .def_property_readonly("normal", &PluckerLine::normal)
      .def_property_readonly("direction", &PluckerLine::direction)
      .def("distance_to_origin", &PluckerLine::distance_to_origin)
      .def("__repr__", [](const PluckerLine& l) {
        return "PluckerLine(n=" + py::repr(py::cast(l.normal())).cast<std::string>() +
               ", v=" + py::repr(py::cast(l.direction())).cast<std::string>() + ")";
      });

  py::class_<LineSegment2D>(m, "LineSegment2D")
      .def(py::init<const Vec2&, const Vec2&>(), py::arg("start"), py::arg("end"))
      .def_property_readonly("start", &LineSegment2D::start)
      .def_property_readonly("end", &LineSegment2D::end)
      .def("line", &LineSegment2D::line)
      .def("length", &LineSegment2D::length);

  py::class_<CameraIntrinsics>(m, "CameraIntrinsics")
      .def(py::init([](double fu, double fv, double cu, double cv) {
             CameraIntrinsics k{fu, fv, cu, cv};
             k.validate();
             return k;
           }),
           py::arg("fu"), py::arg("fv"), py::arg("cu"), py::arg("cv"))
      .def_readonly("fu", &CameraIntrinsics::fu)
      .def_readonly("fv", &CameraIntrinsics::fv)
      .def_readonly("cu", &CameraIntrinsics::cu)
      .def_readonly("cv", &CameraIntrinsics::cv)
      .def("project_point", &CameraIntrinsics::project_point);

  py::class_<ExtrinsicPose>(m, "ExtrinsicPose")
      .def(py::init<>())
      .def(py::init<const Mat3&, const Vec3&, double>(), py::arg("rotation"), py::arg("translation"),
           py::arg("tol") = 1e-9)
      .def_property_readonly("rotation", &ExtrinsicPose::rotation)
      .def_property_readonly("translation", &ExtrinsicPose::translation)
      .def("transform_point", &ExtrinsicPose::transform_point)
      .def("inverse", &ExtrinsicPose::inverse);

  py::class_<PoseError>(m, "PoseError")
      .def_readonly("rot_err_deg", &PoseError::rot_err_deg)
      .def_readonly("trans_err_m", &PoseError::trans_err_m);

  m.def("skew", &skew);
  m.def("exp_so3", &exp_so3);
  m.def("log_so3", &log_so3);
  m.def("transform_line", &transform_line, py::arg("pose"), py::arg("line"));
  m.def("line_projection_matrix", &line_projection_matrix, py::arg("intrinsics"));
  m.def("project_line", &project_line, py::arg("K"), py::arg("line_cam"));
  m.def("pose_retract", &pose_retract, py::arg("pose"), py::arg("dtheta"), py::arg("dP"));
  m.def("pose_error", &pose_error, py::arg("est"), py::arg("gt"));

  py::class_<Correspondence>(m, "Correspondence")
      .def(py::init<PluckerLine, LineSegment2D, std::string>(), py::arg("line"), py::arg("segment"),
           py::arg("id") = "")
      .def_readonly("line", &Correspondence::line)
      .def_readonly("segment", &Correspondence::segment)
      .def_readonly("id", &Correspondence::id);

  py::class_<SolverConfig>(m, "SolverConfig")
      .def(py::init<>())
      .def_readwrite("max_iterations", &SolverConfig::max_iterations)
      .def_readwrite("cost_tolerance", &SolverConfig::cost_tolerance)
      .def_readwrite("step_tolerance", &SolverConfig::step_tolerance)
      .def_readwrite("initial_lambda", &SolverConfig::initial_lambda)
      .def_readwrite("lambda_up", &SolverConfig::lambda_up)
      .def_readwrite("lambda_down", &SolverConfig::lambda_down)
      .def_readwrite("degeneracy_ratio", &SolverConfig::degeneracy_ratio);

  py::class_<DegeneracyReport>(m, "DegeneracyReport")
      .def_property_readonly("degenerate", &DegeneracyReport::degenerate)
      .def_readonly("jacobian_degenerate", &DegeneracyReport::jacobian_degenerate)
      .def_readonly("rotation_degenerate", &DegeneracyReport::rotation_degenerate)
      .def_readonly("translation_degenerate", &DegeneracyReport::translation_degenerate)
      .def_readonly("jacobian_singular_ratio", &DegeneracyReport::jacobian_singular_ratio)
      .def_readonly("direction_span_ratio", &DegeneracyReport::direction_span_ratio)
      .def_readonly("translation_singular_ratio", &DegeneracyReport::translation_singular_ratio);

  py::class_<CalibrationResult>(m, "CalibrationResult")
      .def_readonly("pose", &CalibrationResult::pose)
      .def_readonly("final_cost", &CalibrationResult::final_cost)
      .def_readonly("iterations", &CalibrationResult::iterations)
      .def_readonly("converged", &CalibrationResult::converged)
      .def_readonly("per_line_residuals", &CalibrationResult::per_line_residuals)
      .def_readonly("residual_ids", &CalibrationResult::residual_ids)
      .def_readonly("degeneracy", &CalibrationResult::degeneracy)
      .def_readonly("cost_history", &CalibrationResult::cost_history)
      .def_readonly("warnings", &CalibrationResult::warnings);

  m.def("solve_method1",
        [](const std::vector<Correspondence>& corrs, const ExtrinsicPose& init, const Mat3& K,
           const SolverConfig& cfg) { return method1::solve(corrs, init, K, cfg); },
        py::arg("correspondences"), py::arg("init"), py::arg("K"), py::arg("config") = SolverConfig{});
  m.def("solve_plk_calib",
        [](const std::vector<Correspondence>& corrs, const ExtrinsicPose& init, const Mat3& K,
           const SolverConfig& cfg) { return method2::solve_plk_calib(corrs, init, K, cfg); },
        py::arg("correspondences"), py::arg("init"), py::arg("K"), py::arg("config") = SolverConfig{});
  m.def("method1_residual", &method1::residual, py::arg("corr"), py::arg("pose"), py::arg("K"));
  m.def("method1_jacobian", &method1::jacobian, py::arg("corr"), py::arg("pose"), py::arg("K"));
  m.def("rotation_residual", &method2::rotation_residual, py::arg("image_line"), py::arg("direction"),
        py::arg("R"), py::arg("K"));
  m.def("rotation_jacobian", &method2::rotation_jacobian, py::arg("image_line"), py::arg("direction"),
        py::arg("R"), py::arg("K"));

  m.def("should_merge",
        [](const LineSegment2D& a, const LineSegment2D& b, double dist, double angle, double min_len) {
          return preprocess::should_merge(a, b, {dist, angle, min_len});
        },
        py::arg("a"), py::arg("b"), py::arg("merge_dist_px") = 5.0, py::arg("merge_angle_deg") = 2.0,
        py::arg("min_length_px") = 20.0);
  m.def("merge_all",
        [](const std::vector<LineSegment2D>& segs, double dist, double angle, double min_len) {
          preprocess::SegmentSet set{segs, {dist, angle, min_len}};
          set.config.validate();
          return preprocess::merge_all(set).segments;
        },
        py::arg("segments"), py::arg("merge_dist_px") = 5.0, py::arg("merge_angle_deg") = 2.0,
        py::arg("min_length_px") = 20.0);

  py::class_<sim::TrialOutcome>(m, "TrialOutcome")
      .def_readonly("trial", &sim::TrialOutcome::trial)
      .def_readonly("rot_err_deg", &sim::TrialOutcome::rot_err_deg)
      .def_readonly("trans_err_m", &sim::TrialOutcome::trans_err_m)
      .def_readonly("converged", &sim::TrialOutcome::converged)
      .def_readonly("degenerate", &sim::TrialOutcome::degenerate)
      .def_readonly("completed", &sim::TrialOutcome::completed);

  py::class_<sim::ErrorStats>(m, "ErrorStats")
      .def_readonly("mean", &sim::ErrorStats::mean)
      .def_readonly("stddev", &sim::ErrorStats::stddev)
      .def_readonly("median", &sim::ErrorStats::median);

  py::class_<sim::TrialReport>(m, "TrialReport")
      .def_readonly("trials", &sim::TrialReport::trials)
      .def_readonly("completed", &sim::TrialReport::completed)
      .def_readonly("degenerate_count", &sim::TrialReport::degenerate_count)
      .def_readonly("rotation", &sim::TrialReport::rotation)
      .def_readonly("translation", &sim::TrialReport::translation)
      .def_property_readonly("scenario", [](const sim::TrialReport& r) {
        return std::string(sim::scenario_label(r.scenario));
      })
      .def_property_readonly("method", [](const sim::TrialReport& r) {
        return std::string(sim::method_label(r.method));
      });

  m.def("run_monte_carlo",
        [](const std::string& scenario, const std::string& method, int trials, double sigma,
           std::uint64_t seed, int lines) {
          const auto kind = sim::parse_scenario(scenario);
          const auto meth = sim::parse_method(method);
          if (!kind) throw CalibError(ErrorCode::InvalidConfig, "unknown scenario '" + scenario + "'");
          if (!meth) throw CalibError(ErrorCode::InvalidConfig, "unknown method '" + method + "'");
          sim::Scenario sc;
          sc.kind = *kind;
          sc.line_count = lines;
          sim::TrialConfig tc;
          tc.trials = trials;
          tc.pixel_noise_sigma = sigma;
          tc.seed = seed;
          return sim::run_monte_carlo(sc, tc, *meth);
        },
        py::arg("scenario"), py::arg("method") = "plk", py::arg("trials") = 10, py::arg("sigma") = 1.0,
        py::arg("seed") = 0, py::arg("lines") = 3);

  m.def("parse_calibration_input",
        [](const std::string& text) {
          const auto in = io::parse_calibration_input(text);
          py::dict d;
          d["intrinsics"] = in.intrinsics;
          d["initial_pose"] = in.initial_pose;
          d["ground_truth"] = in.ground_truth ? py::cast(*in.ground_truth) : py::none();
          d["correspondences"] = in.correspondences();
          d["warnings"] = in.warnings;
          return d;
        },
        py::arg("text"));
}
