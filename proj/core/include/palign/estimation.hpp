#pragma once

#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "palign/model.hpp"
#include "palign/sampler.hpp"
#include "palign/types.hpp"

namespace palign {

/// Empirical posterior match probabilities p_jk over the retained samples.
struct MatchProbabilityTable {
  Eigen::MatrixXd p;  // m x n, entries in [0, 1]
  long sample_count = 0;
};

MatchProbabilityTable match_probabilities(const Trace& trace);

/// Loss-optimal point estimate of the matching matrix: maximises
/// sum over declared pairs of (p_jk - K) subject to at most one match per
/// row and column. When the pairs with p_jk > K share no row or column
/// index, they are exactly the optimum; otherwise an exact maximum-weight
/// bipartite assignment is solved over those pairs. Ties p_jk = K are
/// excluded.
MatchingMatrix optimal_matching(const MatchProbabilityTable& table, const LossSpec& loss);

/// Exact maximum-weight bipartite matching over the pairs with
/// score(j, k) > threshold (weights score - threshold), via the Kuhn-Munkres
/// assignment algorithm. Exposed separately so the threshold-rule fast path
/// above can be cross-checked against it.
std::vector<std::pair<int, int>> max_weight_matching(const Eigen::MatrixXd& score,
                                                     double threshold);

/// Posterior expected loss of a declared matching, up to the additive
/// constant that does not depend on the declaration (excluded):
/// -(l10 + l01 - l11 - l00) * sum over declared pairs of (p_jk - K).
double expected_loss(const MatchingMatrix& declared, const MatchProbabilityTable& table,
                     double l00, double l01, double l10, double l11);

struct PosteriorSummary {
  Vec tau_mean;
  Mat tau_cov;             // sample covariance of retained tau draws
  double sigma_mean = 0.0;
  double sigma_var = 0.0;
  std::optional<Mat> A_hat;      // polar mean, present when rotation sampled
  std::vector<double> L_pmf;     // posterior pmf of the match count
};

PosteriorSummary summarize(const Trace& trace);

}  // namespace palign
