#include "plkcalib/calibration.hpp"

#include <cmath>

namespace plkcalib {

void SolverConfig::validate() const {
  const auto positive = [](double x) { return std::isfinite(x) && x > 0.0; };
  if (max_iterations <= 0) {
    throw CalibError(ErrorCode::InvalidConfig, "max_iterations must be positive");
  }
  if (!positive(cost_tolerance) || !positive(step_tolerance) || !positive(initial_lambda) ||
      !positive(degeneracy_ratio)) {
    throw CalibError(ErrorCode::InvalidConfig, "solver tolerances and initial_lambda must be positive");
  }
  if (!(lambda_up > 1.0) || !(lambda_down > 0.0 && lambda_down < 1.0)) {
    throw CalibError(ErrorCode::InvalidConfig, "require lambda_up > 1 > lambda_down > 0");
  }
}

}  // namespace plkcalib
