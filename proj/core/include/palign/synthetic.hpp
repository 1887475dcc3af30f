#pragma once

#include <string>
#include <vector>

#include "palign/model.hpp"
#include "palign/types.hpp"

namespace palign {

/// Forward model: hidden points from a homogeneous Poisson process on an
/// axis-aligned box, independent four-way thinning per point (neither /
/// x only / y only / both), spherical Gaussian noise on each observation,
/// and optionally colour labels with an exp-tilted joint on matched pairs.
struct GenerativeSpec {
  double lambda_rate = 1.0;  // points per unit volume
  Vec box_lo;
  Vec box_hi;
  double p_x = 0.3;
  double p_y = 0.3;
  double rho = 1.0;
  PoseParams pose;  // true A, tau, sigma; y_k solves A y_k + tau = mu + noise

  // Colour model (empty labels = uncoloured data).
  std::vector<std::string> labels;
  std::vector<double> pi_x;
  std::vector<double> pi_y;
  double gamma = 0.0;
  double delta = 0.0;

  double volume() const;
  /// Throws ValidationError unless the four category probabilities
  /// (1 - p_x - p_y - rho p_x p_y, p_x, p_y, rho p_x p_y) are each in [0, 1].
  void validate() const;
};

struct GeneratedInstance {
  Configuration x;
  Configuration y;
  MatchingMatrix truth;
  std::vector<Vec> hidden;  // all realised hidden points mu_i
  std::vector<int> xi;      // x_j -> hidden index
  std::vector<int> eta;     // y_k -> hidden index
};

GeneratedInstance generate(const GenerativeSpec& spec, Rng& rng);

/// Sequential Matern-I style thinning: points (in order) are kept only when
/// at least min_spacing away from every point retained so far. Used to probe
/// sensitivity to the Poisson assumption.
std::vector<Vec> hardcore_thin(const std::vector<Vec>& points, double min_spacing);

}  // namespace palign
