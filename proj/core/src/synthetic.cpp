#include "palign/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>

namespace palign {

namespace {

double unit_uniform(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

int sample_categorical(const std::vector<double>& weights, Rng& rng) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double u = unit_uniform(rng) * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    u -= weights[i];
    if (u <= 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size()) - 1;
}

Vec gaussian_noise(int d, double sigma, Rng& rng) {
  std::normal_distribution<double> normal(0.0, sigma);
  Vec v(d);
  for (int c = 0; c < d; ++c) v(c) = normal(rng);
  return v;
}

}  // namespace

double GenerativeSpec::volume() const {
  double v = 1.0;
  for (int c = 0; c < box_lo.size(); ++c) v *= box_hi(c) - box_lo(c);
  return v;
}

void GenerativeSpec::validate() const {
  const int d = static_cast<int>(box_lo.size());
  if ((d != 2 && d != 3) || box_hi.size() != d) {
    throw ValidationError("generative spec: box must be 2- or 3-dimensional");
  }
  for (int c = 0; c < d; ++c) {
    if (!(box_hi(c) > box_lo(c))) {
      throw ValidationError("generative spec: box has non-positive extent");
    }
  }
  if (!(lambda_rate > 0.0)) throw ValidationError("generative spec: lambda_rate must be > 0");
  if (!(pose.sigma > 0.0)) throw ValidationError("generative spec: sigma must be > 0");
  if (pose.A.rows() != d || pose.A.cols() != d || pose.tau.size() != d) {
    throw ValidationError("generative spec: pose dimensions disagree with the box");
  }
  const double p_both = rho * p_x * p_y;
  const double p_none = 1.0 - p_x - p_y - p_both;
  for (double p : {p_none, p_x, p_y, p_both}) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ValidationError("generative spec: infeasible category probabilities");
    }
  }
  if (!labels.empty()) {
    if (pi_x.size() != labels.size() || pi_y.size() != labels.size()) {
      throw ValidationError("generative spec: colour marginals must match the label list");
    }
  }
}

GeneratedInstance generate(const GenerativeSpec& spec, Rng& rng) {
  spec.validate();
  const int d = static_cast<int>(spec.box_lo.size());
  const double p_both = spec.rho * spec.p_x * spec.p_y;
  const double p_none = 1.0 - spec.p_x - spec.p_y - p_both;
  const bool coloured = !spec.labels.empty();

  // Joint colour weights for matched pairs, exp-tilted and normalised over
  // the finite label alphabet.
  std::vector<double> joint_weights;
  if (coloured) {
    joint_weights.reserve(spec.labels.size() * spec.labels.size());
    for (std::size_t r = 0; r < spec.labels.size(); ++r) {
      for (std::size_t t = 0; t < spec.labels.size(); ++t) {
        joint_weights.push_back(spec.pi_x[r] * spec.pi_y[t] *
                                std::exp(r == t ? spec.gamma : spec.delta));
      }
    }
  }

  const long n_hidden =
      std::poisson_distribution<long>(spec.lambda_rate * spec.volume())(rng);

  GeneratedInstance out{Configuration{}, Configuration{}, MatchingMatrix(0, 0), {}, {}, {}};
  struct Observation {
    Vec point;
    int hidden = -1;
    std::string colour;
  };
  std::vector<Observation> xs;
  std::vector<Observation> ys;

  const Mat a_inverse = spec.pose.A.inverse();
  for (long i = 0; i < n_hidden; ++i) {
    Vec mu(d);
    for (int c = 0; c < d; ++c) {
      mu(c) = spec.box_lo(c) + (spec.box_hi(c) - spec.box_lo(c)) * unit_uniform(rng);
    }
    out.hidden.push_back(mu);

    const int category = sample_categorical({p_none, spec.p_x, spec.p_y, p_both}, rng);
    if (category == 0) continue;

    std::string colour_x, colour_y;
    if (coloured) {
      if (category == 1) {
        colour_x = spec.labels[sample_categorical(spec.pi_x, rng)];
      } else if (category == 2) {
        colour_y = spec.labels[sample_categorical(spec.pi_y, rng)];
      } else {
        const int cell = sample_categorical(joint_weights, rng);
        colour_x = spec.labels[cell / spec.labels.size()];
        colour_y = spec.labels[cell % spec.labels.size()];
      }
    }
    if (category == 1 || category == 3) {
      xs.push_back({Vec(mu + gaussian_noise(d, spec.pose.sigma, rng)),
                    static_cast<int>(out.hidden.size()) - 1, colour_x});
    }
    if (category == 2 || category == 3) {
      // Observed so that A y + tau = mu + noise.
      ys.push_back({Vec(a_inverse * (mu + gaussian_noise(d, spec.pose.sigma, rng) -
                                     spec.pose.tau)),
                    static_cast<int>(out.hidden.size()) - 1, colour_y});
    }
  }

  std::shuffle(xs.begin(), xs.end(), rng);
  std::shuffle(ys.begin(), ys.end(), rng);

  out.truth = MatchingMatrix(static_cast<int>(xs.size()), static_cast<int>(ys.size()));
  for (const Observation& o : xs) {
    out.x.points.push_back(o.point);
    out.xi.push_back(o.hidden);
    if (coloured) out.x.colours.push_back(o.colour);
  }
  for (const Observation& o : ys) {
    out.y.points.push_back(o.point);
    out.eta.push_back(o.hidden);
    if (coloured) out.y.colours.push_back(o.colour);
  }
  for (std::size_t j = 0; j < xs.size(); ++j) {
    for (std::size_t k = 0; k < ys.size(); ++k) {
      if (out.xi[j] == out.eta[k]) out.truth.add(static_cast<int>(j), static_cast<int>(k));
    }
  }
  return out;
}

std::vector<Vec> hardcore_thin(const std::vector<Vec>& points, double min_spacing) {
  if (min_spacing < 0.0) throw std::invalid_argument("hardcore_thin: negative spacing");
  std::vector<Vec> kept;
  for (const Vec& p : points) {
    bool ok = true;
    for (const Vec& q : kept) {
      if ((p - q).norm() < min_spacing) {
        ok = false;
        break;
      }
    }
    if (ok) kept.push_back(p);
  }
  return kept;
}

}  // namespace palign
