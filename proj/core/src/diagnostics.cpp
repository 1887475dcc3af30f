#include "palign/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "palign/estimation.hpp"

namespace palign {

namespace {

double best_retained_log_joint(const Trace& trace) {
  double best = -std::numeric_limits<double>::infinity();
  for (const ChainSample& s : trace.samples) best = std::max(best, s.log_joint);
  if (trace.final_state.has_value()) {
    best = std::max(best, trace.final_state->log_joint);
  }
  return best;
}

// Top-L pairs by posterior probability, ties broken by (j, k).
std::vector<std::pair<int, int>> top_matches(const MatchProbabilityTable& table, int L) {
  std::vector<std::pair<double, std::pair<int, int>>> entries;
  for (int j = 0; j < table.p.rows(); ++j) {
    for (int k = 0; k < table.p.cols(); ++k) {
      if (table.p(j, k) > 0.0) entries.push_back({table.p(j, k), {j, k}});
    }
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < L && i < static_cast<int>(entries.size()); ++i) {
    out.push_back(entries[i].second);
  }
  std::sort(out.begin(), out.end());
  return out;
}

int modal_match_count(const Trace& trace, long phase_start) {
  std::vector<long> counts;
  for (const ChainSample& s : trace.samples) {
    if (s.sweep <= phase_start) continue;
    const std::size_t L = s.matches.size();
    if (counts.size() <= L) counts.resize(L + 1, 0);
    ++counts[L];
  }
  int mode = 0;
  long best = -1;
  for (std::size_t L = 0; L < counts.size(); ++L) {
    if (counts[L] > best) {
      best = counts[L];
      mode = static_cast<int>(L);
    }
  }
  return mode;
}

MatchProbabilityTable phase_probabilities(const Trace& trace, long phase_start) {
  Trace filtered;
  filtered.m = trace.m;
  filtered.n = trace.n;
  for (const ChainSample& s : trace.samples) {
    if (s.sweep > phase_start) filtered.samples.push_back(s);
  }
  return match_probabilities(filtered);
}

}  // namespace

double pilot_threshold(const std::vector<Trace>& pilots, double quantile) {
  if (pilots.empty()) throw std::invalid_argument("pilot_threshold: no pilot traces");
  if (!(quantile >= 0.0 && quantile <= 1.0)) {
    throw std::invalid_argument("pilot_threshold: quantile outside [0, 1]");
  }
  const Trace* best = nullptr;
  double best_value = -std::numeric_limits<double>::infinity();
  for (const Trace& t : pilots) {
    if (t.samples.empty()) continue;
    const double v = best_retained_log_joint(t);
    if (best == nullptr || v > best_value) {
      best = &t;
      best_value = v;
    }
  }
  if (best == nullptr) {
    throw std::invalid_argument("pilot_threshold: pilots retained no samples");
  }
  std::vector<double> values;
  values.reserve(best->samples.size());
  for (const ChainSample& s : best->samples) values.push_back(s.log_joint);
  std::sort(values.begin(), values.end());
  const auto idx = static_cast<std::size_t>(
      quantile * static_cast<double>(values.size() - 1));
  return values[idx];
}

MultistartReport multistart(const Configuration& x, const Configuration& y,
                            const Hyperparams& hyper, const SweepSchedule& schedule_short,
                            const SweepSchedule& schedule_long, int n_starts,
                            double log_post_threshold) {
  if (n_starts < 1) throw ValidationError("multistart: n_starts must be >= 1");
  schedule_short.validate();
  schedule_long.validate();

  MultistartReport report;
  report.n_starts = n_starts;
  report.threshold = log_post_threshold;

  std::vector<Trace> survivor_traces;
  std::vector<int> survivor_ids;

  for (int i = 0; i < n_starts; ++i) {
    const std::uint64_t seed = schedule_short.seed + static_cast<std::uint64_t>(i);
    report.seeds.push_back(seed);

    Rng rng(seed);
    ChainState state =
        make_initial_state(x, y, hyper, schedule_short.sample_rotation, std::nullopt, rng);

    Trace trace;
    trace.m = state.M.m();
    trace.n = state.M.n();
    trace.dim = static_cast<int>(state.pose.tau.size());
    trace.mode = state.mode;
    trace.seed = seed;
    advance_chain(state, x, y, hyper, schedule_short, trace, rng, 0);

    double probe = best_retained_log_joint(trace);
    probe = std::max(probe, state.log_joint);
    const bool pass = probe > log_post_threshold;
    report.passed_flags.push_back(pass ? 1 : 0);

    if (pass) {
      ++report.passed;
      advance_chain(state, x, y, hyper, schedule_long, trace, rng, schedule_short.sweeps);
      survivor_ids.push_back(i);
    }
    report.final_log_joint.push_back(state.log_joint);
    trace.final_state = std::move(state);
    if (pass) survivor_traces.push_back(std::move(trace));
  }

  if (survivor_traces.empty()) return report;

  // Best survivor by final log joint.
  std::size_t best = 0;
  for (std::size_t s = 1; s < survivor_traces.size(); ++s) {
    if (report.final_log_joint[survivor_ids[s]] >
        report.final_log_joint[survivor_ids[best]]) {
      best = s;
    }
  }
  report.best_start = survivor_ids[best];

  const long phase_start = schedule_short.sweeps + schedule_long.burn_in;
  const bool has_long_samples = std::any_of(
      survivor_traces[best].samples.begin(), survivor_traces[best].samples.end(),
      [&](const ChainSample& s) { return s.sweep > phase_start; });
  if (!has_long_samples) {
    report.best_trace = std::move(survivor_traces[best]);
    return report;
  }
  report.top_L = modal_match_count(survivor_traces[best], phase_start);
  report.reference_top_set =
      top_matches(phase_probabilities(survivor_traces[best], phase_start), report.top_L);

  report.consensus = true;
  for (std::size_t s = 0; s < survivor_traces.size(); ++s) {
    const auto set =
        top_matches(phase_probabilities(survivor_traces[s], phase_start), report.top_L);
    if (set != report.reference_top_set) {
      report.consensus = false;
      break;
    }
  }
  report.best_trace = std::move(survivor_traces[best]);
  return report;
}

}  // namespace palign
