#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "palign/types.hpp"

namespace palign {

/// One point configuration: a list of points in R^d (d = 2 or 3) with
/// optional colour labels. Colours are opaque strings compared for equality;
/// any grouping (e.g. amino acid types into chemical groups) happens at
/// ingestion.
struct Configuration {
  std::vector<Vec> points;
  std::vector<std::string> colours;  // empty, or one label per point

  std::size_t size() const { return points.size(); }
  int dim() const { return points.empty() ? 0 : static_cast<int>(points.front().size()); }
  bool has_colours() const { return !colours.empty(); }
  const std::string* colour(std::size_t i) const {
    return has_colours() ? &colours[i] : nullptr;
  }
  /// Throws ValidationError on mixed dimensions, d outside {2, 3}, or a
  /// colour list whose length differs from the point count.
  void validate() const;
};

/// One-to-one partial correspondence between x indices and y indices.
/// Injectivity (at most one match per row and per column) is enforced on
/// every mutation.
class MatchingMatrix {
 public:
  MatchingMatrix(int m, int n);

  int m() const { return m_; }
  int n() const { return n_; }
  int match_count() const { return L_; }
  int unmatched_x_count() const { return m_ - L_; }
  int unmatched_y_count() const { return n_ - L_; }

  bool x_matched(int j) const { return y_of_x_[j] >= 0; }
  bool y_matched(int k) const { return x_of_y_[k] >= 0; }
  int y_of_x(int j) const { return y_of_x_[j]; }  // -1 when unmatched
  int x_of_y(int k) const { return x_of_y_[k]; }

  void add(int j, int k);
  void remove_x(int j);

  /// Matched (j, k) pairs ordered by j.
  std::vector<std::pair<int, int>> pairs() const;
  /// Row-to-column map; -1 marks unmatched rows. Usable as a hash/equality key.
  const std::vector<int>& row_map() const { return y_of_x_; }

  friend bool operator==(const MatchingMatrix&, const MatchingMatrix&) = default;

 private:
  int m_;
  int n_;
  int L_ = 0;
  std::vector<int> y_of_x_;
  std::vector<int> x_of_y_;
};

/// Geometric and noise state: transformation A (a fixed matrix, or a
/// rotation when sampled), translation tau, and noise scale sigma.
struct PoseParams {
  Mat A;
  Vec tau;
  double sigma = 1.0;
};

enum class TransformMode { kFixedTransform, kRotation2d, kRotation3d };

/// Model and prior constants. Two ratio parameters are deliberately kept
/// apart: kappa_match = rho/lambda carries volume units and is the per-match
/// weight in the posterior; prior_count_ratio = rho/(lambda v) is
/// dimensionless and enters only the standalone match-count prior.
struct Hyperparams {
  double kappa_match = 1.0;
  double prior_count_ratio = 1.0;

  // Rotation prior: matrix Fisher F0 in 3-d, von Mises (nu0, kappa0) in 2-d.
  Eigen::Matrix3d F0 = Eigen::Matrix3d::Zero();
  double nu0 = 0.0;
  double kappa0 = 0.0;

  Vec mu_tau;  // empty means the zero vector
  double sigma_tau = 1.0;

  // sigma^-2 ~ Gamma(alpha, beta), beta a rate.
  double alpha = 1.0;
  double beta = 1.0;

  // Colour affinities: like-coloured matches weighted exp(gamma),
  // unlike-coloured exp(delta).
  double gamma = 0.0;
  double delta = 0.0;

  // Probability of proposing a delete (vs a switch) for a matched point.
  double p_star = 0.5;

  Vec mu_tau_or_zero(int dim) const;
  void validate() const;
};

/// Additive loss over pairs, reduced to its single decision-relevant
/// parameter, the cost ratio K = (l01 - l00) / (l10 + l01 - l11 - l00).
struct LossSpec {
  double K = 0.5;

  static LossSpec from_cost_ratio(double K);
  static LossSpec from_losses(double l00, double l01, double l10, double l11);
};

/// Prior pmf of the number of matches L given side sizes (m, n):
/// p(L) proportional to d_ratio^L / ((m-L)! (n-L)! L!), L = 0..min(m, n).
/// Computed in log space; safe for m, n up to 1e4.
std::vector<double> prior_match_count_pmf(int m, int n, double d_ratio);

/// Inverse of the prior elicitation rule: the d_ratio whose match-count
/// prior has its mode within 1 of L_bar, namely L_bar / ((m-L_bar)(n-L_bar)).
/// Rejects L_bar outside the open interval (0, min(m, n)).
double elicit_d_ratio(int m, int n, double L_bar);

/// Log weight of one matched pair (j, k):
///   log kappa_match + log phi_d(z / (sigma sqrt 2)) - d log(sigma sqrt 2)
/// with z = x_j - A y_k - tau, plus gamma/delta when both colour labels are
/// present (gamma if equal, delta otherwise).
double pair_log_weight(const Vec& xj, const Vec& yk, const PoseParams& pose,
                       const Hyperparams& hyper,
                       const std::string* colour_x = nullptr,
                       const std::string* colour_y = nullptr);

double log_prior_tau(const Vec& tau, const Hyperparams& hyper);
/// Density of sigma induced by sigma^-2 ~ Gamma(alpha, beta), Jacobian
/// 2 sigma^-3 included.
double log_prior_sigma(double sigma, const Hyperparams& hyper);
/// tr(F0^T A) in 3-d; kappa0 cos(theta - nu0) in 2-d; zero in fixed mode.
double log_rotation_prior(const Mat& A, const Hyperparams& hyper, TransformMode mode);

/// Joint log density of (M, pose) given the data, up to one additive
/// constant fixed per data set and mode. In fixed-transform mode |A|^n is
/// constant and absorbed and no p(A) term is included.
double log_joint(const MatchingMatrix& M, const PoseParams& pose,
                 const Configuration& x, const Configuration& y,
                 const Hyperparams& hyper, TransformMode mode);

/// Exact log p(M) (normalised over all matchings), using prior_count_ratio.
double log_prior_matching(const MatchingMatrix& M, const Hyperparams& hyper);

}  // namespace palign
