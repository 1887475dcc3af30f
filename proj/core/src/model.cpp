#include "palign/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace palign {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double log_factorial(int k) { return std::lgamma(static_cast<double>(k) + 1.0); }

double log_sum_exp(const std::vector<double>& logs) {
  const double mx = *std::max_element(logs.begin(), logs.end());
  double acc = 0.0;
  for (double v : logs) acc += std::exp(v - mx);
  return mx + std::log(acc);
}
}  // namespace

void Configuration::validate() const {
  if (!colours.empty() && colours.size() != points.size()) {
    throw ValidationError("configuration: colour list length differs from point count");
  }
  if (points.empty()) return;
  const auto d = points.front().size();
  if (d != 2 && d != 3) {
    throw ValidationError("configuration: dimension must be 2 or 3");
  }
  for (const Vec& p : points) {
    if (p.size() != d) {
      throw ValidationError("configuration: mixed point dimensions");
    }
  }
}

MatchingMatrix::MatchingMatrix(int m, int n) : m_(m), n_(n) {
  if (m < 0 || n < 0) throw std::invalid_argument("matching matrix: negative side size");
  y_of_x_.assign(static_cast<std::size_t>(m), -1);
  x_of_y_.assign(static_cast<std::size_t>(n), -1);
}

void MatchingMatrix::add(int j, int k) {
  if (j < 0 || j >= m_ || k < 0 || k >= n_) {
    throw std::logic_error("matching matrix: index out of range");
  }
  if (y_of_x_[j] != -1 || x_of_y_[k] != -1) {
    throw std::logic_error("matching matrix: add would violate injectivity");
  }
  y_of_x_[j] = k;
  x_of_y_[k] = j;
  ++L_;
}

void MatchingMatrix::remove_x(int j) {
  if (j < 0 || j >= m_ || y_of_x_[j] == -1) {
    throw std::logic_error("matching matrix: removing an unmatched row");
  }
  x_of_y_[y_of_x_[j]] = -1;
  y_of_x_[j] = -1;
  --L_;
}

std::vector<std::pair<int, int>> MatchingMatrix::pairs() const {
  std::vector<std::pair<int, int>> out;
  out.reserve(static_cast<std::size_t>(L_));
  for (int j = 0; j < m_; ++j) {
    if (y_of_x_[j] >= 0) out.emplace_back(j, y_of_x_[j]);
  }
  return out;
}

Vec Hyperparams::mu_tau_or_zero(int dim) const {
  if (mu_tau.size() == 0) return Vec::Zero(dim);
  if (mu_tau.size() != dim) {
    throw ValidationError("hyperparams: mu_tau dimension mismatch");
  }
  return mu_tau;
}

void Hyperparams::validate() const {
  if (!(kappa_match > 0.0)) throw ValidationError("hyperparams: kappa_match must be > 0");
  if (!(prior_count_ratio > 0.0)) {
    throw ValidationError("hyperparams: prior_count_ratio must be > 0");
  }
  if (!(sigma_tau > 0.0)) throw ValidationError("hyperparams: sigma_tau must be > 0");
  if (!(alpha > 0.0) || !(beta > 0.0)) {
    throw ValidationError("hyperparams: alpha and beta must be > 0");
  }
  if (!(kappa0 >= 0.0)) throw ValidationError("hyperparams: kappa0 must be >= 0");
  if (!(p_star > 0.0 && p_star < 1.0)) {
    throw ValidationError("hyperparams: p_star must lie in (0, 1)");
  }
}

LossSpec LossSpec::from_cost_ratio(double K) {
  if (!(K > 0.0 && K <= 1.0)) {
    throw ValidationError("loss: cost ratio K must lie in (0, 1]");
  }
  return LossSpec{K};
}

LossSpec LossSpec::from_losses(double l00, double l01, double l10, double l11) {
  const double scale = l10 + l01 - l11 - l00;
  if (!(scale > 0.0)) {
    throw ValidationError("loss: l10 + l01 - l11 - l00 must be > 0");
  }
  if (!(l01 - l00 > 0.0)) {
    throw ValidationError("loss: l01 - l00 must be > 0");
  }
  return from_cost_ratio((l01 - l00) / scale);
}

std::vector<double> prior_match_count_pmf(int m, int n, double d_ratio) {
  if (m < 0 || n < 0) throw std::invalid_argument("prior_match_count_pmf: negative size");
  if (!(d_ratio > 0.0)) {
    throw std::invalid_argument("prior_match_count_pmf: d_ratio must be > 0");
  }
  const int l_max = std::min(m, n);
  std::vector<double> logs(static_cast<std::size_t>(l_max) + 1);
  const double log_r = std::log(d_ratio);
  for (int L = 0; L <= l_max; ++L) {
    logs[L] = L * log_r - log_factorial(m - L) - log_factorial(n - L) - log_factorial(L);
  }
  const double lse = log_sum_exp(logs);
  std::vector<double> pmf(logs.size());
  for (std::size_t i = 0; i < logs.size(); ++i) pmf[i] = std::exp(logs[i] - lse);
  return pmf;
}

double elicit_d_ratio(int m, int n, double L_bar) {
  if (!(L_bar > 0.0) || !(L_bar < std::min(m, n))) {
    throw ValidationError("elicit_d_ratio: L_bar must lie strictly between 0 and min(m, n)");
  }
  return L_bar / ((m - L_bar) * (n - L_bar));
}

double pair_log_weight(const Vec& xj, const Vec& yk, const PoseParams& pose,
                       const Hyperparams& hyper, const std::string* colour_x,
                       const std::string* colour_y) {
  const int d = static_cast<int>(xj.size());
  const Vec z = xj - pose.A * yk - pose.tau;
  const double s2 = pose.sigma * pose.sigma;
  double lw = std::log(hyper.kappa_match) -
              0.5 * d * (kLog2Pi + std::log(2.0 * s2)) -
              z.squaredNorm() / (4.0 * s2);
  if (colour_x != nullptr && colour_y != nullptr) {
    lw += (*colour_x == *colour_y) ? hyper.gamma : hyper.delta;
  }
  return lw;
}

double log_prior_tau(const Vec& tau, const Hyperparams& hyper) {
  const int d = static_cast<int>(tau.size());
  const Vec mu = hyper.mu_tau_or_zero(d);
  const double st2 = hyper.sigma_tau * hyper.sigma_tau;
  return -0.5 * d * (kLog2Pi + std::log(st2)) - (tau - mu).squaredNorm() / (2.0 * st2);
}

double log_prior_sigma(double sigma, const Hyperparams& hyper) {
  if (!(sigma > 0.0)) return -std::numeric_limits<double>::infinity();
  // Gamma(alpha, rate beta) density of s = sigma^-2 times |ds/dsigma| = 2 sigma^-3.
  return hyper.alpha * std::log(hyper.beta) - std::lgamma(hyper.alpha) +
         std::numbers::ln2 - (2.0 * hyper.alpha + 1.0) * std::log(sigma) -
         hyper.beta / (sigma * sigma);
}

double log_rotation_prior(const Mat& A, const Hyperparams& hyper, TransformMode mode) {
  switch (mode) {
    case TransformMode::kFixedTransform:
      return 0.0;
    case TransformMode::kRotation2d:
      // tr(F0^T A) with F0 = (kappa0/2) R(nu0) equals kappa0 cos(theta - nu0).
      return hyper.kappa0 * (std::cos(hyper.nu0) * A(0, 0) + std::sin(hyper.nu0) * A(1, 0));
    case TransformMode::kRotation3d:
      return (hyper.F0.transpose() * Eigen::Matrix3d(A)).trace();
  }
  throw std::logic_error("unreachable transform mode");
}

double log_joint(const MatchingMatrix& M, const PoseParams& pose,
                 const Configuration& x, const Configuration& y,
                 const Hyperparams& hyper, TransformMode mode) {
  double lp = log_prior_tau(pose.tau, hyper) + log_prior_sigma(pose.sigma, hyper) +
              log_rotation_prior(pose.A, hyper, mode);
  for (int j = 0; j < M.m(); ++j) {
    const int k = M.y_of_x(j);
    if (k < 0) continue;
    lp += pair_log_weight(x.points[j], y.points[k], pose, hyper, x.colour(j), y.colour(k));
  }
  return lp;
}

double log_prior_matching(const MatchingMatrix& M, const Hyperparams& hyper) {
  const int m = M.m();
  const int n = M.n();
  const int l_max = std::min(m, n);
  const double log_r = std::log(hyper.prior_count_ratio);
  // Normaliser: sum over l of l! C(m,l) C(n,l) r^l = m! n! r^l / (l!(m-l)!(n-l)!).
  std::vector<double> logs(static_cast<std::size_t>(l_max) + 1);
  for (int l = 0; l <= l_max; ++l) {
    logs[l] = l * log_r + log_factorial(m) + log_factorial(n) - log_factorial(l) -
              log_factorial(m - l) - log_factorial(n - l);
  }
  return M.match_count() * log_r - log_sum_exp(logs);
}

}  // namespace palign
