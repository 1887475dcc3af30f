#include "palign/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "palign/geometry.hpp"

namespace palign {

namespace {

// Kuhn-Munkres on a square cost matrix (minimisation), shortest augmenting
// path formulation. Returns row -> column.
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = 0;
      double delta = std::numeric_limits<double>::infinity();
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

}  // namespace

MatchProbabilityTable match_probabilities(const Trace& trace) {
  if (trace.samples.empty()) {
    throw std::invalid_argument("match_probabilities: empty trace");
  }
  MatchProbabilityTable table;
  table.p = Eigen::MatrixXd::Zero(trace.m, trace.n);
  for (const ChainSample& s : trace.samples) {
    for (const auto& [j, k] : s.matches) table.p(j, k) += 1.0;
  }
  table.sample_count = static_cast<long>(trace.samples.size());
  table.p /= static_cast<double>(table.sample_count);
  return table;
}

std::vector<std::pair<int, int>> max_weight_matching(const Eigen::MatrixXd& score,
                                                     double threshold) {
  // Compact to the rows/columns that carry at least one candidate pair.
  std::vector<int> rows, cols;
  for (int j = 0; j < score.rows(); ++j) {
    if ((score.row(j).array() > threshold).any()) rows.push_back(j);
  }
  for (int k = 0; k < score.cols(); ++k) {
    if ((score.col(k).array() > threshold).any()) cols.push_back(k);
  }
  if (rows.empty()) return {};

  // Pad to a square matrix; non-candidate and padding cells get weight 0, so
  // a perfect assignment on the padded square realises exactly the best
  // partial matching over candidate pairs.
  const int side = static_cast<int>(std::max(rows.size(), cols.size()));
  Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(side, side);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const double w = score(rows[r], cols[c]) - threshold;
      if (w > 0.0) cost(static_cast<int>(r), static_cast<int>(c)) = -w;
    }
  }

  const std::vector<int> row_to_col = solve_assignment(cost);
  std::vector<std::pair<int, int>> out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const int c = row_to_col[r];
    if (c >= 0 && c < static_cast<int>(cols.size()) &&
        score(rows[r], cols[c]) > threshold) {
      out.emplace_back(rows[r], cols[c]);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

MatchingMatrix optimal_matching(const MatchProbabilityTable& table, const LossSpec& loss) {
  const int m = static_cast<int>(table.p.rows());
  const int n = static_cast<int>(table.p.cols());
  MatchingMatrix result(m, n);

  std::vector<std::pair<int, int>> candidates;
  for (int j = 0; j < m; ++j) {
    for (int k = 0; k < n; ++k) {
      if (table.p(j, k) > loss.K) candidates.emplace_back(j, k);
    }
  }

  std::vector<char> row_seen(static_cast<std::size_t>(m), 0);
  std::vector<char> col_seen(static_cast<std::size_t>(n), 0);
  bool duplicate = false;
  for (const auto& [j, k] : candidates) {
    if (row_seen[j] || col_seen[k]) {
      duplicate = true;
      break;
    }
    row_seen[j] = col_seen[k] = 1;
  }

  if (!duplicate) {
    for (const auto& [j, k] : candidates) result.add(j, k);
    return result;
  }
  for (const auto& [j, k] : max_weight_matching(table.p, loss.K)) result.add(j, k);
  return result;
}

double expected_loss(const MatchingMatrix& declared, const MatchProbabilityTable& table,
                     double l00, double l01, double l10, double l11) {
  const LossSpec loss = LossSpec::from_losses(l00, l01, l10, l11);
  const double scale = l10 + l01 - l11 - l00;
  double sum = 0.0;
  for (const auto& [j, k] : declared.pairs()) sum += table.p(j, k) - loss.K;
  return -scale * sum;
}

PosteriorSummary summarize(const Trace& trace) {
  if (trace.samples.empty()) throw std::invalid_argument("summarize: empty trace");
  const int d = trace.dim;
  const auto count = static_cast<double>(trace.samples.size());

  PosteriorSummary out;
  out.tau_mean = Vec::Zero(d);
  double sigma_sum = 0.0;
  for (const ChainSample& s : trace.samples) {
    out.tau_mean += s.tau;
    sigma_sum += s.sigma;
  }
  out.tau_mean /= count;
  out.sigma_mean = sigma_sum / count;

  out.tau_cov = Mat::Zero(d, d);
  double sigma_sq = 0.0;
  for (const ChainSample& s : trace.samples) {
    const Vec c = s.tau - out.tau_mean;
    out.tau_cov += c * c.transpose();
    sigma_sq += (s.sigma - out.sigma_mean) * (s.sigma - out.sigma_mean);
  }
  const double denom = count > 1.0 ? count - 1.0 : 1.0;
  out.tau_cov /= denom;
  out.sigma_var = sigma_sq / denom;

  if (trace.mode != TransformMode::kFixedTransform) {
    std::vector<Mat> rotations;
    rotations.reserve(trace.samples.size());
    for (const ChainSample& s : trace.samples) rotations.push_back(s.A);
    out.A_hat = polar_rotation_mean(rotations);
  }

  out.L_pmf.assign(static_cast<std::size_t>(std::min(trace.m, trace.n)) + 1, 0.0);
  for (const ChainSample& s : trace.samples) {
    out.L_pmf[s.matches.size()] += 1.0;
  }
  for (double& v : out.L_pmf) v /= count;
  return out;
}

}  // namespace palign
