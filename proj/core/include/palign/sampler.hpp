#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "palign/geometry.hpp"
#include "palign/model.hpp"
#include "palign/types.hpp"

namespace palign {

/// Kernel schedule for one chain. `sweeps` is the total sweep count
/// including burn-in; samples are retained after `burn_in` at every
/// `thin`-th sweep.
struct SweepSchedule {
  int m_updates_per_sweep = 1;
  bool sample_rotation = false;
  long sweeps = 1;
  long burn_in = 0;
  long thin = 1;
  std::uint64_t seed = 0;
  double theta13_halfwidth = 0.1;    // random-walk half-width for theta13
  long cache_check_interval = 10000; // sweeps between cached-log-joint resyncs

  void validate() const;
};

struct ChainState {
  MatchingMatrix M;
  PoseParams pose;
  TransformMode mode = TransformMode::kFixedTransform;
  std::optional<double> theta;          // rotation angle when mode is kRotation2d
  std::optional<EulerAngles3> angles;   // Euler angles when mode is kRotation3d
  double log_joint = 0.0;               // cached; resynced periodically

  int unmatched_y() const { return M.unmatched_y_count(); }
};

struct AcceptCounter {
  long proposed = 0;
  long accepted = 0;
  double rate() const { return proposed == 0 ? 0.0 : static_cast<double>(accepted) / proposed; }
};

struct MoveStats {
  AcceptCounter add;
  AcceptCounter del;
  AcceptCounter switch_;
  AcceptCounter rotation_walk;
  long null_moves = 0;  // add/switch proposals with no unmatched candidate
};

struct ChainSample {
  long sweep = 0;  // 1-based absolute sweep index
  std::vector<std::pair<int, int>> matches;
  Vec tau;
  double sigma = 1.0;
  Mat A;
  std::optional<double> theta;
  std::optional<EulerAngles3> angles;
  double log_joint = 0.0;
  // Cumulative acceptance rates (add, delete, switch, rotation walk) at the
  // time the sample was retained.
  double add_rate = 0.0, del_rate = 0.0, switch_rate = 0.0, rotation_rate = 0.0;
};

struct Trace {
  int m = 0;
  int n = 0;
  int dim = 0;
  TransformMode mode = TransformMode::kFixedTransform;
  std::uint64_t seed = 0;
  std::vector<ChainSample> samples;
  MoveStats stats;
  double max_cache_drift = 0.0;
  std::optional<ChainState> final_state;
};

/// Neutral, reproducible starting point: M empty, tau at the difference of
/// configuration centroids (after the initial transform), sigma at the prior
/// median, rotation Haar-uniform when sampled.
ChainState make_initial_state(const Configuration& x, const Configuration& y,
                              const Hyperparams& hyper, bool sample_rotation,
                              const std::optional<Mat>& fixed_transform, Rng& rng);

// --- Single-site updates -------------------------------------------------

/// Gibbs draw of tau from its Gaussian full conditional.
void gibbs_update_tau(ChainState& state, const Configuration& x,
                      const Configuration& y, const Hyperparams& hyper, Rng& rng);

/// Gibbs draw of sigma via sigma^-2 ~ Gamma(alpha + dL/2, beta + sum/4).
void gibbs_update_sigma(ChainState& state, const Configuration& x,
                        const Configuration& y, const Hyperparams& hyper, Rng& rng);

/// Gibbs draw of the planar rotation angle from its von Mises full
/// conditional.
void update_rotation_2d(ChainState& state, const Configuration& x,
                        const Configuration& y, const Hyperparams& hyper, Rng& rng);

/// One sweep over the generalised Euler angles: Gibbs on theta12, random
/// walk Metropolis on theta13 (target includes the cos(theta13) volume
/// element), Gibbs on theta23, with conditional coefficients recomputed
/// after each sub-update.
void update_rotation_3d(ChainState& state, const Configuration& x,
                        const Configuration& y, const Hyperparams& hyper,
                        Rng& rng, double theta13_halfwidth = 0.1,
                        AcceptCounter* rotation_stats = nullptr);

/// One random-walk Metropolis step on theta13 with the target density
/// proportional to exp(a cos t + b sin t) cos t on (-pi/2, pi/2). Proposals
/// outside the interval are rejected. Exposed for direct use by oracle
/// tests.
void theta13_random_walk_step(double& theta13, double a, double b,
                              double halfwidth, Rng& rng,
                              AcceptCounter* stats = nullptr);

/// One Metropolis-Hastings matching move (add / delete / switch) in detailed
/// balance; null proposals (no unmatched candidate on the opposite side)
/// leave the state unchanged and count as rejected.
void update_matching(ChainState& state, const Configuration& x,
                     const Configuration& y, const Hyperparams& hyper, Rng& rng,
                     MoveStats* stats = nullptr);

// Log acceptance ratios (before the min with 0) of the matching moves, under
// the sub-kernel convention that the reverse move is initiated from the same
// data point. Exposed so reversibility can be checked against first
// principles on enumerable states.
double log_ratio_add(const ChainState& state, int j, int k, bool from_x,
                     const Configuration& x, const Configuration& y,
                     const Hyperparams& hyper);
double log_ratio_delete(const ChainState& state, int j, int k, bool from_x,
                        const Configuration& x, const Configuration& y,
                        const Hyperparams& hyper);
double log_ratio_switch_x(const ChainState& state, int j, int k_new,
                          const Configuration& x, const Configuration& y,
                          const Hyperparams& hyper);
double log_ratio_switch_y(const ChainState& state, int k, int j_new,
                          const Configuration& x, const Configuration& y,
                          const Hyperparams& hyper);

/// One sweep: m_updates_per_sweep matching moves, then tau, then sigma, then
/// the rotation update when enabled.
void sweep(ChainState& state, const Configuration& x, const Configuration& y,
           const Hyperparams& hyper, const SweepSchedule& schedule, Rng& rng,
           MoveStats* stats = nullptr);

/// Runs `schedule.sweeps` sweeps, appending retained samples to `trace`.
/// Burn-in and thinning are relative to this call; retained samples are
/// stamped with sweep_offset + local sweep index. The cached log joint is
/// resynced (and its drift recorded) every cache_check_interval sweeps.
void advance_chain(ChainState& state, const Configuration& x,
                   const Configuration& y, const Hyperparams& hyper,
                   const SweepSchedule& schedule, Trace& trace, Rng& rng,
                   long sweep_offset = 0);

/// Full protocol run: initialise (unless `init` is given), burn in, sample.
/// `fixed_transform` supplies A when rotation sampling is off; identity when
/// absent.
Trace run_chain(const Configuration& x, const Configuration& y,
                const Hyperparams& hyper, const SweepSchedule& schedule,
                std::optional<ChainState> init = std::nullopt,
                std::optional<Mat> fixed_transform = std::nullopt);

}  // namespace palign
