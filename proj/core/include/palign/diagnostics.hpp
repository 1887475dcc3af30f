#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "palign/sampler.hpp"

namespace palign {

/// Outcome of the multistart screening protocol: chains launched from
/// independent random rotations, screened on log posterior after a short
/// run, survivors continued and compared on their top-L match sets.
struct MultistartReport {
  int n_starts = 0;
  int passed = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<double> final_log_joint;  // per start, at the end of its run
  std::vector<char> passed_flags;
  double threshold = 0.0;

  int top_L = 0;  // posterior-modal match count of the best survivor
  std::vector<std::pair<int, int>> reference_top_set;
  bool consensus = false;  // all survivors share the reference top-L set

  int best_start = -1;           // index of the best surviving chain
  std::optional<Trace> best_trace;
};

/// Quantile (default 0.25) of the retained log-joint values of the best
/// pilot chain (the chain attaining the largest log joint).
double pilot_threshold(const std::vector<Trace>& pilots, double quantile = 0.25);

/// Runs n_starts chains seeded schedule_short.seed + i. Each chain runs the
/// short schedule; chains whose log joint never exceeds `log_post_threshold`
/// are abandoned, the rest continue through the long schedule on the same
/// random stream. Consensus is judged on long-phase samples only. Zero
/// survivors is reported, not fatal.
MultistartReport multistart(const Configuration& x, const Configuration& y,
                            const Hyperparams& hyper,
                            const SweepSchedule& schedule_short,
                            const SweepSchedule& schedule_long, int n_starts,
                            double log_post_threshold);

}  // namespace palign
