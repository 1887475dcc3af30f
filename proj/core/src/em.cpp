#include "palign/em.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

#include "palign/geometry.hpp"

namespace palign {

namespace {

// Nelder-Mead maximiser. The start point is kept as a simplex vertex, so the
// returned value never falls below f(x0).
struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  bool converged = false;
};

SimplexResult maximize_nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                   const std::vector<double>& x0,
                                   const std::vector<double>& step, int max_iters,
                                   double spread_tol) {
  const std::size_t dim = x0.size();
  std::vector<std::vector<double>> pts(dim + 1, x0);
  for (std::size_t i = 0; i < dim; ++i) pts[i + 1][i] += step[i];
  std::vector<double> vals(dim + 1);
  for (std::size_t i = 0; i <= dim; ++i) vals[i] = f(pts[i]);

  auto order = [&] {
    std::vector<std::size_t> idx(dim + 1);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return vals[a] > vals[b];
    });
    std::vector<std::vector<double>> p2;
    std::vector<double> v2;
    for (std::size_t i : idx) {
      p2.push_back(pts[i]);
      v2.push_back(vals[i]);
    }
    pts = std::move(p2);
    vals = std::move(v2);
  };

  bool converged = false;
  for (int it = 0; it < max_iters; ++it) {
    order();
    if (std::abs(vals.front() - vals.back()) <=
        spread_tol * (1.0 + std::abs(vals.front()))) {
      converged = true;
      break;
    }
    std::vector<double> centroid(dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) {
      for (std::size_t c = 0; c < dim; ++c) centroid[c] += pts[i][c];
    }
    for (double& c : centroid) c /= static_cast<double>(dim);

    auto blend = [&](double t) {
      std::vector<double> p(dim);
      for (std::size_t c = 0; c < dim; ++c) {
        p[c] = centroid[c] + t * (pts[dim][c] - centroid[c]);
      }
      return p;
    };

    const std::vector<double> reflected = blend(-1.0);
    const double fr = f(reflected);
    if (fr > vals[0]) {
      const std::vector<double> expanded = blend(-2.0);
      const double fe = f(expanded);
      if (fe > fr) {
        pts[dim] = expanded;
        vals[dim] = fe;
      } else {
        pts[dim] = reflected;
        vals[dim] = fr;
      }
      continue;
    }
    if (fr > vals[dim - 1]) {
      pts[dim] = reflected;
      vals[dim] = fr;
      continue;
    }
    const std::vector<double> contracted = blend(0.5);
    const double fc = f(contracted);
    if (fc > vals[dim]) {
      pts[dim] = contracted;
      vals[dim] = fc;
      continue;
    }
    for (std::size_t i = 1; i <= dim; ++i) {  // shrink towards the best vertex
      for (std::size_t c = 0; c < dim; ++c) {
        pts[i][c] = pts[0][c] + 0.5 * (pts[i][c] - pts[0][c]);
      }
      vals[i] = f(pts[i]);
    }
  }
  order();
  return {pts[0], vals[0], converged};
}

struct PoseCoding {
  TransformMode mode;
  int dim;

  std::size_t size() const {
    switch (mode) {
      case TransformMode::kFixedTransform: return static_cast<std::size_t>(dim) + 1;
      case TransformMode::kRotation2d: return 4;
      case TransformMode::kRotation3d: return 7;
    }
    throw std::logic_error("unreachable transform mode");
  }

  std::vector<double> encode(const PoseParams& pose) const {
    std::vector<double> v;
    if (mode == TransformMode::kRotation2d) {
      v.push_back(std::atan2(pose.A(1, 0), pose.A(0, 0)));
    } else if (mode == TransformMode::kRotation3d) {
      const auto angles = euler_from_matrix(Eigen::Matrix3d(pose.A));
      if (!angles.has_value()) {
        throw ValidationError("EM: initial transform is not usable as a rotation");
      }
      v.push_back(angles->theta12);
      v.push_back(angles->theta13);
      v.push_back(angles->theta23);
    }
    for (int c = 0; c < dim; ++c) v.push_back(pose.tau(c));
    v.push_back(std::log(pose.sigma));
    return v;
  }

  PoseParams decode(const std::vector<double>& v, const PoseParams& reference) const {
    PoseParams pose = reference;
    std::size_t at = 0;
    if (mode == TransformMode::kRotation2d) {
      pose.A = rotation_matrix_2d(v[at++]);
    } else if (mode == TransformMode::kRotation3d) {
      EulerAngles3 angles{v[0], v[1], v[2]};
      at = 3;
      pose.A = rotation_matrix_3d(angles);
    }
    Vec tau(dim);
    for (int c = 0; c < dim; ++c) tau(c) = v[at++];
    pose.tau = tau;
    pose.sigma = std::exp(v[at]);
    return pose;
  }
};

double weighted_pair_sum(const Eigen::MatrixXd& p, const PoseParams& pose,
                         const Configuration& x, const Configuration& y,
                         const Hyperparams& hyper) {
  double acc = 0.0;
  for (int j = 0; j < p.rows(); ++j) {
    for (int k = 0; k < p.cols(); ++k) {
      acc += p(j, k) *
             pair_log_weight(x.points[j], y.points[k], pose, hyper, x.colour(j), y.colour(k));
    }
  }
  return acc;
}

double pose_log_prior(const PoseParams& pose, const Hyperparams& hyper, TransformMode mode) {
  return log_rotation_prior(pose.A, hyper, mode) + log_prior_tau(pose.tau, hyper) +
         log_prior_sigma(pose.sigma, hyper);
}

// Marginal objective of the constraint-free model:
// log[|A|^n p(A) p(tau) p(sigma)] + sum_jk log(1 + w_jk).
double marginal_objective(const PoseParams& pose, const Configuration& x,
                          const Configuration& y, const Hyperparams& hyper,
                          TransformMode mode) {
  double acc = pose_log_prior(pose, hyper, mode);
  for (std::size_t j = 0; j < x.size(); ++j) {
    for (std::size_t k = 0; k < y.size(); ++k) {
      const double lw =
          pair_log_weight(x.points[j], y.points[k], pose, hyper, x.colour(j), y.colour(k));
      acc += std::log1p(std::exp(std::min(lw, 700.0)));
    }
  }
  return acc;
}

}  // namespace

SoftMatchTable em_e_step(const PoseParams& pose, const Configuration& x,
                         const Configuration& y, const Hyperparams& hyper) {
  SoftMatchTable table;
  table.p = Eigen::MatrixXd(x.size(), y.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    for (std::size_t k = 0; k < y.size(); ++k) {
      const double lw =
          pair_log_weight(x.points[j], y.points[k], pose, hyper, x.colour(j), y.colour(k));
      // w / (1 + w) evaluated stably through the log weight; clamped away
      // from the closed endpoints, which are unreachable for finite w.
      table.p(j, k) =
          std::clamp(1.0 / (1.0 + std::exp(-lw)), 1e-300, 1.0 - 1e-16);
    }
  }
  return table;
}

EmStepResult em_m_step(const SoftMatchTable& table, const Configuration& x,
                       const Configuration& y, const Hyperparams& hyper,
                       const PoseParams& current, TransformMode mode) {
  const PoseCoding coding{mode, static_cast<int>(current.tau.size())};
  const auto objective = [&](const std::vector<double>& v) {
    const PoseParams pose = coding.decode(v, current);
    return pose_log_prior(pose, hyper, mode) + weighted_pair_sum(table.p, pose, x, y, hyper);
  };

  std::vector<double> step;
  if (mode == TransformMode::kRotation2d) step = {0.2};
  if (mode == TransformMode::kRotation3d) step = {0.2, 0.1, 0.2};
  const double tau_step = std::max(0.25, 0.5 * current.sigma);
  for (int c = 0; c < coding.dim; ++c) step.push_back(tau_step);
  step.push_back(0.25);  // log sigma

  const auto fit = maximize_nelder_mead(objective, coding.encode(current), step, 800, 1e-12);
  return {coding.decode(fit.x, current), fit.value, fit.converged};
}

EmResult run_em(const Configuration& x, const Configuration& y, const Hyperparams& hyper,
                const PoseParams& init, TransformMode mode, int max_iters, double tol) {
  x.validate();
  y.validate();
  hyper.validate();

  EmResult out;
  out.pose = init;
  out.objective_trace.push_back(marginal_objective(init, x, y, hyper, mode));
  for (int it = 0; it < max_iters; ++it) {
    const SoftMatchTable table = em_e_step(out.pose, x, y, hyper);
    out.pose = em_m_step(table, x, y, hyper, out.pose, mode).pose;
    const double objective = marginal_objective(out.pose, x, y, hyper, mode);
    out.objective_trace.push_back(objective);
    const double previous = out.objective_trace[out.objective_trace.size() - 2];
    if (objective - previous < tol) {
      out.converged = true;
      break;
    }
  }
  out.table = em_e_step(out.pose, x, y, hyper);
  return out;
}

}  // namespace palign
