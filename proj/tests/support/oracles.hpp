// Independent test oracles: quadrature densities, Kolmogorov distances,
// exhaustive matching enumeration, and small statistics helpers. Everything
// here is deliberately written from first principles, independent of the
// implementation paths under test.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

namespace oracles {

inline double log_sum_exp(const std::vector<double>& logs) {
  const double mx = *std::max_element(logs.begin(), logs.end());
  double acc = 0.0;
  for (double v : logs) acc += std::exp(v - mx);
  return mx + std::log(acc);
}

inline double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return acc / static_cast<double>(v.size() - 1);
}

// Normalised density on [lo, hi] from a log-density evaluated on a fine
// grid; exposes an interpolated CDF.
class GridDensity {
 public:
  GridDensity(const std::function<double(double)>& log_density, double lo, double hi,
              int n = 20001)
      : lo_(lo), hi_(hi) {
    xs_.resize(n);
    std::vector<double> f(n);
    for (int i = 0; i < n; ++i) {
      xs_[i] = lo + (hi - lo) * i / static_cast<double>(n - 1);
      f[i] = log_density(xs_[i]);
    }
    const double mx = *std::max_element(f.begin(), f.end());
    for (double& v : f) v = std::exp(v - mx);
    cdf_.assign(n, 0.0);
    for (int i = 1; i < n; ++i) {
      cdf_[i] = cdf_[i - 1] + 0.5 * (f[i] + f[i - 1]) * (xs_[i] - xs_[i - 1]);
    }
    const double total = cdf_.back();
    for (double& v : cdf_) v /= total;
  }

  double cdf(double x) const {
    if (x <= lo_) return 0.0;
    if (x >= hi_) return 1.0;
    const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    const auto i = static_cast<std::size_t>(it - xs_.begin());
    const double t = (x - xs_[i - 1]) / (xs_[i] - xs_[i - 1]);
    return cdf_[i - 1] + t * (cdf_[i] - cdf_[i - 1]);
  }

  // Expectation of g under the density, by the same trapezoid rule.
  double expect(const std::function<double(double)>& g) const {
    double acc = 0.0;
    for (std::size_t i = 1; i < xs_.size(); ++i) {
      const double w = cdf_[i] - cdf_[i - 1];
      acc += w * 0.5 * (g(xs_[i]) + g(xs_[i - 1]));
    }
    return acc;
  }

 private:
  double lo_, hi_;
  std::vector<double> xs_;
  std::vector<double> cdf_;
};

// Kolmogorov distance between the empirical CDF of `samples` and `cdf`.
inline double kolmogorov_distance(std::vector<double> samples,
                                  const std::function<double(double)>& cdf) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double c = cdf(samples[i]);
    d = std::max(d, std::abs(c - static_cast<double>(i) / n));
    d = std::max(d, std::abs(c - static_cast<double>(i + 1) / n));
  }
  return d;
}

// All injective partial matchings between m rows and n columns, as row maps
// (entry -1 = unmatched). Counting check: m = n = 3 yields 34.
inline std::vector<std::vector<int>> enumerate_matchings(int m, int n) {
  std::vector<std::vector<int>> out;
  std::vector<int> current(static_cast<std::size_t>(m), -1);
  std::vector<char> used(static_cast<std::size_t>(n), 0);
  const std::function<void(int)> rec = [&](int j) {
    if (j == m) {
      out.push_back(current);
      return;
    }
    rec(j + 1);  // row j unmatched
    for (int k = 0; k < n; ++k) {
      if (used[k]) continue;
      used[k] = 1;
      current[j] = k;
      rec(j + 1);
      current[j] = -1;
      used[k] = 0;
    }
  };
  rec(0);
  return out;
}

}  // namespace oracles
