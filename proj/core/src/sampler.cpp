#include "palign/sampler.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/distributions/gamma.hpp>

namespace palign {

namespace {

double unit_uniform(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

double standard_normal(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

double pair_weight_of(const ChainState& s, const Configuration& x,
                      const Configuration& y, const Hyperparams& h, int j, int k) {
  return pair_log_weight(x.points[j], y.points[k], s.pose, h, x.colour(j), y.colour(k));
}

// Index of the r-th unmatched y point (r is 0-based).
int nth_unmatched_y(const MatchingMatrix& M, int r) {
  for (int k = 0; k < M.n(); ++k) {
    if (!M.y_matched(k) && r-- == 0) return k;
  }
  throw std::logic_error("nth_unmatched_y: rank out of range");
}

int nth_unmatched_x(const MatchingMatrix& M, int r) {
  for (int j = 0; j < M.m(); ++j) {
    if (!M.x_matched(j) && r-- == 0) return j;
  }
  throw std::logic_error("nth_unmatched_x: rank out of range");
}

bool accept(double log_ratio, Rng& rng) {
  if (log_ratio >= 0.0) return true;
  return std::log(unit_uniform(rng)) < log_ratio;
}

// Cross-moment F_data = (1 / 2 sigma^2) sum_matched (x_j - tau) y_k^T.
Mat matched_cross_moment(const ChainState& s, const Configuration& x,
                         const Configuration& y) {
  const int d = static_cast<int>(s.pose.tau.size());
  Mat f = Mat::Zero(d, d);
  for (int j = 0; j < s.M.m(); ++j) {
    const int k = s.M.y_of_x(j);
    if (k < 0) continue;
    f += (x.points[j] - s.pose.tau) * y.points[k].transpose();
  }
  return f / (2.0 * s.pose.sigma * s.pose.sigma);
}

void refresh_log_joint(ChainState& s, const Configuration& x,
                       const Configuration& y, const Hyperparams& h) {
  s.log_joint = log_joint(s.M, s.pose, x, y, h, s.mode);
}

double theta13_log_target(double t, double a, double b) {
  return a * std::cos(t) + b * std::sin(t) + std::log(std::cos(t));
}

}  // namespace

void SweepSchedule::validate() const {
  if (m_updates_per_sweep < 1) {
    throw ValidationError("schedule: m_updates_per_sweep must be >= 1");
  }
  if (burn_in < 0 || sweeps <= burn_in) {
    throw ValidationError("schedule: need sweeps > burn_in >= 0");
  }
  if (thin < 1) throw ValidationError("schedule: thin must be >= 1");
  if (!(theta13_halfwidth > 0.0)) {
    throw ValidationError("schedule: theta13_halfwidth must be > 0");
  }
}

ChainState make_initial_state(const Configuration& x, const Configuration& y,
                              const Hyperparams& hyper, bool sample_rotation,
                              const std::optional<Mat>& fixed_transform, Rng& rng) {
  x.validate();
  y.validate();
  hyper.validate();
  int d = x.dim() != 0 ? x.dim() : y.dim();
  if (x.dim() != 0 && y.dim() != 0 && x.dim() != y.dim()) {
    throw ValidationError("configurations have different dimensions");
  }
  if (d == 0) {
    d = static_cast<int>(hyper.mu_tau.size());
    if (d == 0) {
      throw ValidationError("cannot infer dimension from empty configurations");
    }
  }

  ChainState s{MatchingMatrix(static_cast<int>(x.size()), static_cast<int>(y.size())),
               PoseParams{}};
  if (sample_rotation) {
    if (d == 2) {
      s.mode = TransformMode::kRotation2d;
      s.theta = sample_uniform_angle(rng);
      s.pose.A = rotation_matrix_2d(*s.theta);
    } else {
      s.mode = TransformMode::kRotation3d;
      s.angles = sample_uniform_rotation_3d(rng);
      s.pose.A = rotation_matrix_3d(*s.angles);
    }
  } else {
    s.mode = TransformMode::kFixedTransform;
    s.pose.A = fixed_transform.has_value() ? *fixed_transform : Mat(Mat::Identity(d, d));
    if (s.pose.A.rows() != d || s.pose.A.cols() != d) {
      throw ValidationError("fixed transform has the wrong dimensions");
    }
  }

  if (!x.points.empty() && !y.points.empty()) {
    Vec cx = Vec::Zero(d);
    for (const Vec& p : x.points) cx += p;
    cx /= static_cast<double>(x.size());
    Vec cy = Vec::Zero(d);
    for (const Vec& p : y.points) cy += p;
    cy /= static_cast<double>(y.size());
    s.pose.tau = cx - s.pose.A * cy;
  } else {
    s.pose.tau = hyper.mu_tau_or_zero(d);
  }

  const boost::math::gamma_distribution<double> prior(hyper.alpha, 1.0 / hyper.beta);
  s.pose.sigma = 1.0 / std::sqrt(boost::math::median(prior));

  refresh_log_joint(s, x, y, hyper);
  return s;
}

void gibbs_update_tau(ChainState& s, const Configuration& x, const Configuration& y,
                      const Hyperparams& h, Rng& rng) {
  const int d = static_cast<int>(s.pose.tau.size());
  const double prior_prec = 1.0 / (h.sigma_tau * h.sigma_tau);
  const double pair_prec = 1.0 / (2.0 * s.pose.sigma * s.pose.sigma);

  Vec weighted = h.mu_tau_or_zero(d) * prior_prec;
  for (int j = 0; j < s.M.m(); ++j) {
    const int k = s.M.y_of_x(j);
    if (k < 0) continue;
    weighted += (x.points[j] - s.pose.A * y.points[k]) * pair_prec;
  }
  const double total_prec = prior_prec + s.M.match_count() * pair_prec;
  const double sd = std::sqrt(1.0 / total_prec);

  Vec draw(d);
  for (int c = 0; c < d; ++c) draw(c) = weighted(c) / total_prec + sd * standard_normal(rng);
  s.pose.tau = draw;
  refresh_log_joint(s, x, y, h);
}

void gibbs_update_sigma(ChainState& s, const Configuration& x, const Configuration& y,
                        const Hyperparams& h, Rng& rng) {
  const int d = static_cast<int>(s.pose.tau.size());
  double ssq = 0.0;
  for (int j = 0; j < s.M.m(); ++j) {
    const int k = s.M.y_of_x(j);
    if (k < 0) continue;
    ssq += (x.points[j] - s.pose.A * y.points[k] - s.pose.tau).squaredNorm();
  }
  const double shape = h.alpha + 0.5 * d * s.M.match_count();
  const double rate = h.beta + 0.25 * ssq;
  const double precision = std::gamma_distribution<double>(shape, 1.0 / rate)(rng);
  s.pose.sigma = 1.0 / std::sqrt(precision);
  refresh_log_joint(s, x, y, h);
}

void update_rotation_2d(ChainState& s, const Configuration& x, const Configuration& y,
                        const Hyperparams& h, Rng& rng) {
  if (s.mode != TransformMode::kRotation2d) {
    throw std::logic_error("update_rotation_2d: chain is not in 2-d rotation mode");
  }
  const Mat S = matched_cross_moment(s, x, y);
  const double cos_coeff = h.kappa0 * std::cos(h.nu0) + S(0, 0) + S(1, 1);
  const double sin_coeff = h.kappa0 * std::sin(h.nu0) - S(0, 1) + S(1, 0);
  s.theta = sample_von_mises_ab(cos_coeff, sin_coeff, rng);
  s.pose.A = rotation_matrix_2d(*s.theta);
  refresh_log_joint(s, x, y, h);
}

void theta13_random_walk_step(double& theta13, double a, double b, double halfwidth,
                              Rng& rng, AcceptCounter* stats) {
  if (stats != nullptr) ++stats->proposed;
  const double proposal =
      theta13 + (2.0 * unit_uniform(rng) - 1.0) * halfwidth;
  if (std::abs(proposal) >= std::numbers::pi / 2.0) return;  // zero target density
  const double log_ratio =
      theta13_log_target(proposal, a, b) - theta13_log_target(theta13, a, b);
  if (accept(log_ratio, rng)) {
    theta13 = proposal;
    if (stats != nullptr) ++stats->accepted;
  }
}

void update_rotation_3d(ChainState& s, const Configuration& x, const Configuration& y,
                        const Hyperparams& h, Rng& rng, double theta13_halfwidth,
                        AcceptCounter* rotation_stats) {
  if (s.mode != TransformMode::kRotation3d || !s.angles.has_value()) {
    throw std::logic_error("update_rotation_3d: chain is not in 3-d rotation mode");
  }
  const Eigen::Matrix3d F = h.F0 + Eigen::Matrix3d(matched_cross_moment(s, x, y));
  EulerAngles3 angles = *s.angles;

  const TrigCoeffs c12 = euler_conditional_coeffs(F, angles, EulerAxis::k12);
  angles.theta12 = sample_von_mises_ab(c12.a, c12.b, rng);

  const TrigCoeffs c13 = euler_conditional_coeffs(F, angles, EulerAxis::k13);
  theta13_random_walk_step(angles.theta13, c13.a, c13.b, theta13_halfwidth, rng,
                           rotation_stats);

  const TrigCoeffs c23 = euler_conditional_coeffs(F, angles, EulerAxis::k23);
  angles.theta23 = sample_von_mises_ab(c23.a, c23.b, rng);

  s.angles = angles;
  s.pose.A = rotation_matrix_3d(angles);
  refresh_log_joint(s, x, y, h);
}

double log_ratio_add(const ChainState& s, int j, int k, bool from_x,
                     const Configuration& x, const Configuration& y,
                     const Hyperparams& h) {
  const int candidates = from_x ? s.M.unmatched_y_count() : s.M.unmatched_x_count();
  return pair_weight_of(s, x, y, h, j, k) + std::log(h.p_star * candidates);
}

double log_ratio_delete(const ChainState& s, int j, int k, bool from_x,
                        const Configuration& x, const Configuration& y,
                        const Hyperparams& h) {
  const int candidates =
      (from_x ? s.M.unmatched_y_count() : s.M.unmatched_x_count()) + 1;
  return -pair_weight_of(s, x, y, h, j, k) - std::log(h.p_star * candidates);
}

double log_ratio_switch_x(const ChainState& s, int j, int k_new,
                          const Configuration& x, const Configuration& y,
                          const Hyperparams& h) {
  const int k_old = s.M.y_of_x(j);
  return pair_weight_of(s, x, y, h, j, k_new) - pair_weight_of(s, x, y, h, j, k_old);
}

double log_ratio_switch_y(const ChainState& s, int k, int j_new,
                          const Configuration& x, const Configuration& y,
                          const Hyperparams& h) {
  const int j_old = s.M.x_of_y(k);
  return pair_weight_of(s, x, y, h, j_new, k) - pair_weight_of(s, x, y, h, j_old, k);
}

void update_matching(ChainState& s, const Configuration& x, const Configuration& y,
                     const Hyperparams& h, Rng& rng, MoveStats* stats) {
  MoveStats scratch;
  MoveStats& st = stats != nullptr ? *stats : scratch;
  const int m = s.M.m();
  const int n = s.M.n();
  if (m + n == 0) return;

  const int pick = std::uniform_int_distribution<int>(0, m + n - 1)(rng);
  const bool from_x = pick < m;

  if (from_x) {
    const int j = pick;
    if (!s.M.x_matched(j)) {
      ++st.add.proposed;
      const int n_u = s.M.unmatched_y_count();
      if (n_u == 0) {
        ++st.null_moves;
        return;
      }
      const int k = nth_unmatched_y(
          s.M, std::uniform_int_distribution<int>(0, n_u - 1)(rng));
      const double lr = log_ratio_add(s, j, k, true, x, y, h);
      if (accept(lr, rng)) {
        s.M.add(j, k);
        s.log_joint += pair_weight_of(s, x, y, h, j, k);
        ++st.add.accepted;
      }
    } else if (unit_uniform(rng) < h.p_star) {
      ++st.del.proposed;
      const int k = s.M.y_of_x(j);
      const double lr = log_ratio_delete(s, j, k, true, x, y, h);
      if (accept(lr, rng)) {
        s.log_joint -= pair_weight_of(s, x, y, h, j, k);
        s.M.remove_x(j);
        ++st.del.accepted;
      }
    } else {
      ++st.switch_.proposed;
      const int n_u = s.M.unmatched_y_count();
      if (n_u == 0) {
        ++st.null_moves;
        return;
      }
      const int k_new = nth_unmatched_y(
          s.M, std::uniform_int_distribution<int>(0, n_u - 1)(rng));
      const double lr = log_ratio_switch_x(s, j, k_new, x, y, h);
      if (accept(lr, rng)) {
        const int k_old = s.M.y_of_x(j);
        s.log_joint += pair_weight_of(s, x, y, h, j, k_new) -
                       pair_weight_of(s, x, y, h, j, k_old);
        s.M.remove_x(j);
        s.M.add(j, k_new);
        ++st.switch_.accepted;
      }
    }
    return;
  }

  const int k = pick - m;
  if (!s.M.y_matched(k)) {
    ++st.add.proposed;
    const int m_u = s.M.unmatched_x_count();
    if (m_u == 0) {
      ++st.null_moves;
      return;
    }
    const int j = nth_unmatched_x(
        s.M, std::uniform_int_distribution<int>(0, m_u - 1)(rng));
    const double lr = log_ratio_add(s, j, k, false, x, y, h);
    if (accept(lr, rng)) {
      s.M.add(j, k);
      s.log_joint += pair_weight_of(s, x, y, h, j, k);
      ++st.add.accepted;
    }
  } else if (unit_uniform(rng) < h.p_star) {
    ++st.del.proposed;
    const int j = s.M.x_of_y(k);
    const double lr = log_ratio_delete(s, j, k, false, x, y, h);
    if (accept(lr, rng)) {
      s.log_joint -= pair_weight_of(s, x, y, h, j, k);
      s.M.remove_x(j);
      ++st.del.accepted;
    }
  } else {
    ++st.switch_.proposed;
    const int m_u = s.M.unmatched_x_count();
    if (m_u == 0) {
      ++st.null_moves;
      return;
    }
    const int j_new = nth_unmatched_x(
        s.M, std::uniform_int_distribution<int>(0, m_u - 1)(rng));
    const double lr = log_ratio_switch_y(s, k, j_new, x, y, h);
    if (accept(lr, rng)) {
      const int j_old = s.M.x_of_y(k);
      s.log_joint += pair_weight_of(s, x, y, h, j_new, k) -
                     pair_weight_of(s, x, y, h, j_old, k);
      s.M.remove_x(j_old);
      s.M.add(j_new, k);
      ++st.switch_.accepted;
    }
  }
}

void sweep(ChainState& s, const Configuration& x, const Configuration& y,
           const Hyperparams& h, const SweepSchedule& schedule, Rng& rng,
           MoveStats* stats) {
  for (int i = 0; i < schedule.m_updates_per_sweep; ++i) {
    update_matching(s, x, y, h, rng, stats);
  }
  gibbs_update_tau(s, x, y, h, rng);
  gibbs_update_sigma(s, x, y, h, rng);
  if (schedule.sample_rotation) {
    if (s.mode == TransformMode::kRotation2d) {
      update_rotation_2d(s, x, y, h, rng);
    } else if (s.mode == TransformMode::kRotation3d) {
      update_rotation_3d(s, x, y, h, rng, schedule.theta13_halfwidth,
                         stats != nullptr ? &stats->rotation_walk : nullptr);
    } else {
      throw std::logic_error("sweep: rotation sampling enabled on a fixed-transform chain");
    }
  }
}

void advance_chain(ChainState& s, const Configuration& x, const Configuration& y,
                   const Hyperparams& h, const SweepSchedule& schedule, Trace& trace,
                   Rng& rng, long sweep_offset) {
  for (long sw = 1; sw <= schedule.sweeps; ++sw) {
    sweep(s, x, y, h, schedule, rng, &trace.stats);

    if (schedule.cache_check_interval > 0 && sw % schedule.cache_check_interval == 0) {
      const double fresh = log_joint(s.M, s.pose, x, y, h, s.mode);
      trace.max_cache_drift =
          std::max(trace.max_cache_drift, std::abs(fresh - s.log_joint));
      s.log_joint = fresh;
    }

    if (sw > schedule.burn_in && (sw - schedule.burn_in) % schedule.thin == 0) {
      ChainSample sample;
      sample.sweep = sweep_offset + sw;
      sample.matches = s.M.pairs();
      sample.tau = s.pose.tau;
      sample.sigma = s.pose.sigma;
      sample.A = s.pose.A;
      sample.theta = s.theta;
      sample.angles = s.angles;
      sample.log_joint = s.log_joint;
      sample.add_rate = trace.stats.add.rate();
      sample.del_rate = trace.stats.del.rate();
      sample.switch_rate = trace.stats.switch_.rate();
      sample.rotation_rate = trace.stats.rotation_walk.rate();
      trace.samples.push_back(std::move(sample));
    }
  }
}

Trace run_chain(const Configuration& x, const Configuration& y, const Hyperparams& hyper,
                const SweepSchedule& schedule, std::optional<ChainState> init,
                std::optional<Mat> fixed_transform) {
  schedule.validate();
  Rng rng(schedule.seed);
  ChainState state = init.has_value()
                         ? std::move(*init)
                         : make_initial_state(x, y, hyper, schedule.sample_rotation,
                                              fixed_transform, rng);

  Trace trace;
  trace.m = state.M.m();
  trace.n = state.M.n();
  trace.dim = static_cast<int>(state.pose.tau.size());
  trace.mode = state.mode;
  trace.seed = schedule.seed;
  advance_chain(state, x, y, hyper, schedule, trace, rng, 0);
  trace.final_state = std::move(state);
  return trace;
}

}  // namespace palign
