#include "tcal/lm.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "tcal/errors.hpp"

namespace tcal {

Eigen::VectorXd fd_column(const ResidualFn& residuals, const Eigen::VectorXd& x, int param,
                          double step) {
  Eigen::VectorXd xp = x, xm = x;
  xp[param] += step;
  xm[param] -= step;
  try {
    return (residuals(xp) - residuals(xm)) / (2.0 * step);
  } catch (const NumericalError&) {
    // One side left the valid domain; fall back to a one-sided difference.
    const Eigen::VectorXd r0 = residuals(x);
    try {
      return (residuals(xp) - r0) / step;
    } catch (const NumericalError&) {
      return (r0 - residuals(xm)) / step;
    }
  }
}

LmResult lm_solve(const ResidualFn& residuals, Eigen::VectorXd x0, const Eigen::VectorXd& fd_steps,
                  const LmOptions& opts) {
  const int n = static_cast<int>(x0.size());
  if (fd_steps.size() != n) throw ValidationError("lm_solve: fd_steps size mismatch");

  LmResult res;
  Eigen::VectorXd r = residuals(x0);
  double cost = r.squaredNorm();
  res.cost_history.push_back(cost);
  double lambda = opts.lambda_init;

  for (int iter = 0; iter < opts.max_iters; ++iter) {
    res.iterations = iter + 1;

    Eigen::MatrixXd jac(r.size(), n);
    for (int j = 0; j < n; ++j) jac.col(j) = fd_column(residuals, x0, j, fd_steps[j]);

    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd g = jac.transpose() * r;
    if (opts.grad_tol > 0.0 && g.lpNorm<Eigen::Infinity>() < opts.grad_tol) {
      res.converged = true;
      break;
    }

    bool accepted = false;
    for (int attempt = 0; attempt < 25; ++attempt) {
      Eigen::MatrixXd damped = jtj;
      for (int i = 0; i < n; ++i) damped(i, i) += lambda * std::max(jtj(i, i), 1e-12);
      const Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
      if (ldlt.info() != Eigen::Success) {
        lambda *= opts.lambda_up;
        continue;
      }
      const Eigen::VectorXd delta = ldlt.solve(-g);
      if (!delta.allFinite()) {
        lambda *= opts.lambda_up;
        continue;
      }

      const Eigen::VectorXd x_try = x0 + delta;
      double cost_try = std::numeric_limits<double>::infinity();
      Eigen::VectorXd r_try;
      try {
        r_try = residuals(x_try);
        cost_try = r_try.squaredNorm();
      } catch (const NumericalError&) {
        // Step left the valid domain; treat as a rejected step.
      }

      if (cost_try < cost) {
        const double rel_drop = (cost - cost_try) / std::max(cost, 1e-300);
        x0 = x_try;
        r = std::move(r_try);
        cost = cost_try;
        res.cost_history.push_back(cost);
        lambda *= opts.lambda_down;
        lambda = std::max(lambda, 1e-12);
        accepted = true;
        if (rel_drop < opts.rel_cost_tol) res.converged = true;
        break;
      }
      lambda *= opts.lambda_up;
      if (lambda > 1e16) break;
    }

    if (!accepted) {
      // No improving step at any damping: either we sit at a (numerical)
      // minimum, or the model is genuinely stuck. Use the gradient to decide.
      res.converged = cost < 1e-24 || g.lpNorm<Eigen::Infinity>() <= 1e-8 * (1.0 + cost);
      break;
    }
    if (res.converged) break;
  }

  res.x = std::move(x0);
  res.cost = cost;
  return res;
}

}  // namespace tcal
