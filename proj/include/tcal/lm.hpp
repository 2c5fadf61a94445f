#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

#include "tcal/config.hpp"

namespace tcal {

struct LmOptions {
  int max_iters = 100;
  double rel_cost_tol = 1e-10;   // stop when the relative cost decrease drops below
  double grad_tol = 0.0;         // stop when ||J^T r||_inf drops below (0 disables)
  double lambda_init = 1e-3;
  double lambda_up = 10.0;
  double lambda_down = 0.1;
};

struct LmResult {
  Eigen::VectorXd x;
  double cost = 0.0;             // sum of squared residuals
  int iterations = 0;
  bool converged = false;
  std::vector<double> cost_history;  // accepted-step costs, non-increasing
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Dense Levenberg-Marquardt with central finite-difference Jacobians
// (per-parameter steps in fd_steps) and a lambda * diag(J^T J) damped normal
// equation solved by Cholesky. Residual evaluations that throw NumericalError
// count as rejected steps; throws SingularNormalEquations when the damped
// system cannot be solved at any lambda.
LmResult lm_solve(const ResidualFn& residuals, Eigen::VectorXd x0,
                  const Eigen::VectorXd& fd_steps, const LmOptions& opts);

// Central-difference Jacobian column helper shared with the structured
// solvers; falls back to a one-sided difference when one side fails.
Eigen::VectorXd fd_column(const ResidualFn& residuals, const Eigen::VectorXd& x, int param,
                          double step);

}  // namespace tcal
