#include "plkcalib/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "plkcalib/io.hpp"
#include "plkcalib/method1.hpp"
#include "plkcalib/method2.hpp"
#include "plkcalib/preprocess.hpp"
#include "plkcalib/sim.hpp"

namespace plkcalib::cli {
namespace {

struct Logger {
  std::ostream& err;
  LogLevel level;

  template <class... Args>
  void info(fmt::format_string<Args...> f, Args&&... args) const {
    if (level != LogLevel::Quiet) err << fmt::format(f, std::forward<Args>(args)...) << '\n';
  }
  template <class... Args>
  void debug(fmt::format_string<Args...> f, Args&&... args) const {
    if (level == LogLevel::Debug) err << fmt::format(f, std::forward<Args>(args)...) << '\n';
  }
};

void add_solver_flags(CLI::App* cmd, SolverConfig& cfg) {
  cmd->add_option("--max-iters,--max-iterations", cfg.max_iterations, "LM iteration budget");
  cmd->add_option("--cost-tolerance", cfg.cost_tolerance, "stop when an accepted step lowers the cost by less");
  cmd->add_option("--step-tolerance", cfg.step_tolerance, "stop when the tangent step norm falls below");
  cmd->add_option("--initial-lambda", cfg.initial_lambda, "initial LM damping");
  cmd->add_option("--lambda-up", cfg.lambda_up, "damping factor after a rejected step");
  cmd->add_option("--lambda-down", cfg.lambda_down, "damping factor after an accepted step");
  cmd->add_option("--degeneracy-ratio", cfg.degeneracy_ratio,
                  "singular value ratio below which a configuration is degenerate");
}

void write_output(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw CalibError(ErrorCode::Parse, "cannot write '" + path + "'");
  f << text;
}

struct CalibrateArgs {
  std::string input;
  std::string method = "plk";
  std::string out;
  SolverConfig solver;
};

int cmd_calibrate(const CalibrateArgs& a, std::ostream& out, const Logger& log) {
  a.solver.validate();
  const auto method = sim::parse_method(a.method);
  if (!method) throw CalibError(ErrorCode::InvalidConfig, "unknown method '" + a.method + "'");
  const io::CalibrationInput in = io::load_calibration_input(a.input);
  for (const auto& w : in.warnings) log.info("warning: {}", w);

  const auto corrs = in.correspondences();
  const Mat3 K = line_projection_matrix(in.intrinsics);
  const auto t0 = std::chrono::steady_clock::now();
  const CalibrationResult result = *method == sim::Method::Method1
                                       ? method1::solve(corrs, in.initial_pose, K, a.solver)
                                       : method2::solve_plk_calib(corrs, in.initial_pose, K, a.solver);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const io::Report report = io::make_report(std::string(sim::method_label(*method)), result,
                                            in.ground_truth, wall);
  write_output(a.out, io::write_report(report), out);
  for (const auto& w : result.warnings) log.info("warning: {}", w);
  log.debug("iterations {}, final cost {:.6g} px^2", result.iterations, result.final_cost);

  if (result.degeneracy.degenerate()) {
    const auto& d = result.degeneracy;
    log.info(
        "degenerate configuration: jacobian {} (ratio {:.3g}), rotation {} (direction span {:.3g}), "
        "translation {} (ratio {:.3g})",
        d.jacobian_degenerate, d.jacobian_singular_ratio, d.rotation_degenerate,
        d.direction_span_ratio, d.translation_degenerate, d.translation_singular_ratio);
    return kDegenerate;
  }
  if (!result.converged) {
    log.info("solver did not converge in {} iterations", result.iterations);
    return kNotConverged;
  }
  return kOk;
}

struct SimulateArgs {
  std::string scenario;
  std::string method = "plk";
  int trials = 10;
  double sigma = 1.0;
  std::uint64_t seed = 0;
  int lines = 3;
  double init_rot_deg = 5.0;
  double init_trans_m = 0.5;
  std::string out;
  SolverConfig solver;
};

std::string summary_table(std::span<const sim::TrialReport> reports) {
  std::string s = fmt::format("{:<9}{:<9}{:>26}{:>26}{:>12}{:>11}\n", "scenario", "method",
                              "rot_err_deg mean±std", "trans_err_m mean±std", "degenerate",
                              "completed");
  for (const auto& r : reports) {
    const int n = static_cast<int>(r.trials.size());
    s += fmt::format("{:<9}{:<9}{:>26}{:>26}{:>12}{:>11}\n", sim::scenario_label(r.scenario),
                     sim::method_label(r.method),
                     fmt::format("{:.3f}±{:.3f}", r.rotation.mean, r.rotation.stddev),
                     fmt::format("{:.3f}±{:.3f}", r.translation.mean, r.translation.stddev),
                     fmt::format("{}/{}", r.degenerate_count, r.completed),
                     fmt::format("{}/{}", r.completed, n));
  }
  return s;
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out, const Logger& log) {
  const auto kind = sim::parse_scenario(a.scenario);
  if (!kind) throw CalibError(ErrorCode::InvalidConfig, "unknown scenario '" + a.scenario + "'");
  std::vector<sim::Method> methods;
  if (a.method == "both") {
    methods = {sim::Method::Method1, sim::Method::PlkCalib};
  } else if (const auto m = sim::parse_method(a.method)) {
    methods = {*m};
  } else {
    throw CalibError(ErrorCode::InvalidConfig, "unknown method '" + a.method + "'");
  }

  sim::Scenario scenario;
  scenario.kind = *kind;
  scenario.line_count = a.lines;
  sim::TrialConfig tc;
  tc.pixel_noise_sigma = a.sigma;
  tc.init_rot_offset_deg = a.init_rot_deg;
  tc.init_trans_offset_m = a.init_trans_m;
  tc.trials = a.trials;
  tc.seed = a.seed;
  tc.validate();
  a.solver.validate();

  std::vector<sim::TrialReport> reports;
  for (const auto m : methods) {
    reports.push_back(sim::run_monte_carlo(scenario, tc, m, {}, a.solver));
    for (const auto& t : reports.back().trials) {
      if (!t.completed) log.info("trial {} failed: {}", t.trial, t.failure);
    }
  }

  std::ostringstream csv;
  io::write_trials_csv(csv, reports);
  write_output(a.out, csv.str(), out);
  const std::string table = summary_table(reports);
  if (a.out.empty() || a.out == "-") {
    log.info("{}", table);
  } else {
    out << table;
  }
  return kOk;
}

struct PreprocessArgs {
  std::string in;
  std::string out;
  preprocess::MergeConfig cfg;
};

int cmd_preprocess(const PreprocessArgs& a, std::ostream& out, const Logger& log) {
  a.cfg.validate();
  std::ifstream f(a.in);
  if (!f) throw CalibError(ErrorCode::Parse, "cannot open '" + a.in + "'");
  preprocess::SegmentSet set;
  try {
    set.segments = io::read_segments(f);
  } catch (const CalibError& e) {
    throw CalibError(e.code(), a.in + ": " + e.what());
  }
  set.config = a.cfg;
  const auto merged = preprocess::merge_all(set);
  std::ostringstream text;
  io::write_segments(text, merged.segments);
  write_output(a.out, text.str(), out);
  const std::string counts =
      fmt::format("segments: {} in, {} out", set.segments.size(), merged.segments.size());
  if (a.out.empty() || a.out == "-") {
    log.info("{}", counts);
  } else {
    out << counts << '\n';
  }
  return kOk;
}

}  // namespace

LogLevel log_level_from_env() {
  const char* v = std::getenv("PLKCALIB_LOG");
  if (!v) return LogLevel::Info;
  const std::string s(v);
  if (s == "quiet" || s == "0") return LogLevel::Quiet;
  if (s == "debug" || s == "2") return LogLevel::Debug;
  return LogLevel::Info;
}

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err, LogLevel level) {
  CLI::App app{"LiDAR-camera extrinsic calibration from line correspondences", "plkcalib"};
  app.require_subcommand(1);

  CalibrateArgs ca;
  auto* calibrate = app.add_subcommand("calibrate", "estimate the extrinsic from a JSON input file");
  calibrate->add_option("--input", ca.input, "calibration input (JSON)")->required();
  calibrate->add_option("--method", ca.method, "method1 | plk")->check(CLI::IsMember({"method1", "plk"}));
  calibrate->add_option("--out", ca.out, "report path (stdout if omitted)");
  add_solver_flags(calibrate, ca.solver);

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo evaluation on synthetic scenes");
  simulate->add_option("--scenario", sa.scenario, "a | b | c | d")
      ->required()
      ->check(CLI::IsMember({"a", "b", "c", "d"}));
  simulate->add_option("--method", sa.method, "method1 | plk | both")
      ->check(CLI::IsMember({"method1", "plk", "both"}));
  simulate->add_option("--trials", sa.trials, "number of trials")->check(CLI::PositiveNumber);
  simulate->add_option("--sigma", sa.sigma, "pixel noise standard deviation (px)")->check(CLI::NonNegativeNumber);
  simulate->add_option("--seed", sa.seed, "RNG seed");
  simulate->add_option("--lines", sa.lines, "lines per scene")->check(CLI::Range(3, 1000));
  simulate->add_option("--init-rot-deg", sa.init_rot_deg, "initial rotation offset per axis (deg)");
  simulate->add_option("--init-trans-m", sa.init_trans_m, "initial translation offset per axis (m)");
  simulate->add_option("--out", sa.out, "CSV path (stdout if omitted)");
  add_solver_flags(simulate, sa.solver);

  PreprocessArgs pa;
  auto* pre = app.add_subcommand("preprocess", "merge and filter 2D line segments");
  pre->add_option("--in", pa.in, "segment file, one 'u_s v_s u_e v_e' per line")->required();
  pre->add_option("--out", pa.out, "output segment file (stdout if omitted)");
  pre->add_option("--merge-dist", pa.cfg.merge_dist_px, "endpoint distance threshold (px)");
  pre->add_option("--merge-angle", pa.cfg.merge_angle_deg, "direction threshold (deg)");
  pre->add_option("--min-length", pa.cfg.min_length_px, "minimum kept length (px)");

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInvalidInput;
  }

  const Logger log{err, level};
  try {
    if (calibrate->parsed()) return cmd_calibrate(ca, out, log);
    if (simulate->parsed()) return cmd_simulate(sa, out, log);
    return cmd_preprocess(pa, out, log);
  } catch (const CalibError& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidInput;
  }
}

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace plkcalib::cli
