#pragma once

// Small dense Levenberg-Marquardt driver over a manifold state.
//
// The caller supplies
//   evaluate(state, residual, jacobian*) -> void   (jacobian may be null)
//   retract(state, delta) -> State
// and the driver minimises |residual|^2 with Marquardt diagonal scaling.

#include <algorithm>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "plkcalib/calibration.hpp"

namespace plkcalib {

template <class State>
struct LmOutcome {
  State state;
  double cost = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> cost_history;
  Eigen::MatrixXd jacobian;  // at the returned state
};

template <class State, class Evaluate, class Retract>
LmOutcome<State> levenberg_marquardt(State init, Evaluate&& evaluate, Retract&& retract,
                                     const SolverConfig& cfg) {
  cfg.validate();
  LmOutcome<State> out;
  out.state = std::move(init);

  Eigen::VectorXd r;
  Eigen::MatrixXd J;
  evaluate(out.state, r, &J);
  double cost = r.squaredNorm();
  out.cost_history.push_back(cost);

  double lambda = cfg.initial_lambda;
  Eigen::VectorXd r_trial;
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    out.iterations = it;
    if (cost == 0.0) {
      out.converged = true;
      break;
    }
    const Eigen::MatrixXd H = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r;
    const double diag_floor = 1e-12 * std::max(1.0, H.diagonal().maxCoeff());
    const Eigen::VectorXd D = H.diagonal().cwiseMax(diag_floor);

    Eigen::MatrixXd A = H;
    A.diagonal() += lambda * D;
    const Eigen::VectorXd delta = A.ldlt().solve(-g);

    if (!delta.allFinite() || delta.norm() < cfg.step_tolerance) {
      out.converged = delta.allFinite();
      break;
    }

    State candidate = retract(out.state, delta);
    evaluate(candidate, r_trial, nullptr);
    const double trial_cost = r_trial.squaredNorm();

    if (trial_cost < cost) {
      const double decrease = cost - trial_cost;
      out.state = std::move(candidate);
      cost = trial_cost;
      out.cost_history.push_back(cost);
      lambda = std::max(lambda * cfg.lambda_down, 1e-15);
      evaluate(out.state, r, &J);
      if (decrease < cfg.cost_tolerance) {
        out.converged = true;
        break;
      }
    } else {
      lambda *= cfg.lambda_up;
    }
  }
  out.cost = cost;
  out.jacobian = std::move(J);
  return out;
}

}  // namespace plkcalib
