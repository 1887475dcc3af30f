#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "palign/model.hpp"
#include "palign/types.hpp"

namespace palign {

/// Constraint-free soft match responsibilities p_jk = w_jk / (1 + w_jk);
/// rows and columns are deliberately unconstrained (the approximation drops
/// the one-match-per-point rule).
struct SoftMatchTable {
  Eigen::MatrixXd p;  // m x n, entries strictly in (0, 1)
};

SoftMatchTable em_e_step(const PoseParams& pose, const Configuration& x,
                         const Configuration& y, const Hyperparams& hyper);

struct EmStepResult {
  PoseParams pose;
  double objective = 0.0;  // value of the maximised M-step objective
  bool improved = true;    // false when the optimiser failed to improve
};

/// Local maximiser of log[|A|^n p(A) p(tau) p(sigma)] + sum p_jk log w_jk
/// over the pose, with the rotation kept feasible through the Euler angle
/// parameterisation and sigma through its logarithm.
EmStepResult em_m_step(const SoftMatchTable& table, const Configuration& x,
                       const Configuration& y, const Hyperparams& hyper,
                       const PoseParams& current, TransformMode mode);

struct EmResult {
  PoseParams pose;
  SoftMatchTable table;
  std::vector<double> objective_trace;  // marginal objective, one entry per cycle
  bool converged = false;
};

/// Alternates E and M steps until the marginal objective
/// log[|A|^n p(A) p(tau) p(sigma)] + sum log(1 + w_jk) improves by less than
/// `tol`, or max_iters cycles.
EmResult run_em(const Configuration& x, const Configuration& y,
                const Hyperparams& hyper, const PoseParams& init,
                TransformMode mode, int max_iters = 200, double tol = 1e-8);

}  // namespace palign
