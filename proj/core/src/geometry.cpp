#include "palign/geometry.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace palign {

namespace {
constexpr double kPi = std::numbers::pi;

double unit_uniform(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

Eigen::Matrix3d elementary_rotation(int i, int j, double theta) {
  Eigen::Matrix3d r = Eigen::Matrix3d::Identity();
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  r(i, i) = c;
  r(j, j) = c;
  r(i, j) = -s;
  r(j, i) = s;
  return r;
}
}  // namespace

double wrap_angle(double theta) {
  const double w = std::remainder(theta, 2.0 * kPi);  // [-pi, pi]
  return w <= -kPi ? w + 2.0 * kPi : w;
}

Eigen::Matrix2d Rotation2::matrix() const { return rotation_matrix_2d(theta); }

Eigen::Matrix2d rotation_matrix_2d(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

Eigen::Matrix3d EulerAngles3::matrix() const { return rotation_matrix_3d(*this); }

Eigen::Matrix3d rotation_matrix_3d(const EulerAngles3& angles) {
  return elementary_rotation(0, 1, angles.theta12) *
         elementary_rotation(0, 2, angles.theta13) *
         elementary_rotation(1, 2, angles.theta23);
}

std::optional<EulerAngles3> euler_from_matrix(const Eigen::Matrix3d& A) {
  if ((A.transpose() * A - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-9 ||
      A.determinant() < 0.0) {
    return std::nullopt;
  }
  const double s13 = A(2, 0);
  if (std::abs(s13) >= 1.0 - 1e-12) return std::nullopt;
  EulerAngles3 e;
  e.theta13 = std::asin(s13);
  e.theta23 = std::atan2(A(2, 1), A(2, 2));
  e.theta12 = std::atan2(A(1, 0), A(0, 0));
  return e;
}

double sample_uniform_angle(Rng& rng) {
  // unit_uniform is in [0, 1), so the result lands in (-pi, pi].
  return kPi - 2.0 * kPi * unit_uniform(rng);
}

double sample_von_mises(const VonMisesParams& params, Rng& rng) {
  if (params.kappa < 0.0) {
    throw std::invalid_argument("von Mises concentration must be >= 0");
  }
  if (params.kappa < 1e-12) return sample_uniform_angle(rng);

  // Best/Fisher (1979) rejection sampler.
  const double kappa = params.kappa;
  const double a = 1.0 + std::sqrt(1.0 + 4.0 * kappa * kappa);
  const double b = (a - std::sqrt(2.0 * a)) / (2.0 * kappa);
  const double r = (1.0 + b * b) / (2.0 * b);

  double f = 0.0;
  for (;;) {
    const double z = std::cos(kPi * unit_uniform(rng));
    f = (1.0 + r * z) / (r + z);
    const double c = kappa * (r - f);
    const double u2 = unit_uniform(rng);
    if (c * (2.0 - c) - u2 > 0.0) break;
    if (std::log(c / u2) + 1.0 - c >= 0.0) break;
  }
  const double sign = unit_uniform(rng) < 0.5 ? -1.0 : 1.0;
  return wrap_angle(params.nu + sign * std::acos(f));
}

double sample_von_mises_ab(double a, double b, Rng& rng) {
  return sample_von_mises({std::atan2(b, a), std::hypot(a, b)}, rng);
}

TrigCoeffs euler_conditional_coeffs(const Eigen::Matrix3d& F,
                                    const EulerAngles3& angles,
                                    EulerAxis axis) {
  const double s13 = std::sin(angles.theta13);
  const double c13 = std::cos(angles.theta13);
  const double s12 = std::sin(angles.theta12);
  const double c12 = std::cos(angles.theta12);
  const double s23 = std::sin(angles.theta23);
  const double c23 = std::cos(angles.theta23);

  switch (axis) {
    case EulerAxis::k12:
      return {(F(1, 1) - s13 * F(0, 2)) * c23 + (-F(1, 2) - s13 * F(0, 1)) * s23 +
                  c13 * F(0, 0),
              (-s13 * F(1, 2) - F(0, 1)) * c23 + (F(0, 2) - s13 * F(1, 1)) * s23 +
                  c13 * F(1, 0)};
    case EulerAxis::k13:
      return {s12 * F(1, 0) + c12 * F(0, 0) + s23 * F(2, 1) + c23 * F(2, 2),
              (-s23 * F(0, 1) - c23 * F(0, 2)) * c12 +
                  (-s23 * F(1, 1) - c23 * F(1, 2)) * s12 + F(2, 0)};
    case EulerAxis::k23:
      return {(F(1, 1) - s13 * F(0, 2)) * c12 + (-s13 * F(1, 2) - F(0, 1)) * s12 +
                  c13 * F(2, 2),
              (-F(1, 2) - s13 * F(0, 1)) * c12 + (F(0, 2) - s13 * F(1, 1)) * s12 +
                  c13 * F(2, 1)};
  }
  throw std::logic_error("unreachable Euler axis");
}

EulerAngles3 sample_uniform_rotation_3d(Rng& rng) {
  EulerAngles3 e;
  e.theta12 = sample_uniform_angle(rng);
  e.theta23 = sample_uniform_angle(rng);
  // Density proportional to cos(theta13) means sin(theta13) ~ U(-1, 1).
  e.theta13 = std::asin(1.0 - 2.0 * unit_uniform(rng));
  return e;
}

Mat polar_rotation_mean(const std::vector<Mat>& samples) {
  if (samples.empty()) {
    throw std::invalid_argument("polar_rotation_mean: empty sample list");
  }
  const auto d = samples.front().rows();
  Mat abar = Mat::Zero(d, d);
  for (const Mat& s : samples) {
    if (s.rows() != d || s.cols() != d) {
      throw std::invalid_argument("polar_rotation_mean: inconsistent dimensions");
    }
    abar += s;
  }
  abar /= static_cast<double>(samples.size());

  Eigen::SelfAdjointEigenSolver<Mat> es(Mat(abar.transpose() * abar));
  const auto& evals = es.eigenvalues();
  if (!(evals(0) > 1e-12 * std::max(1.0, evals(d - 1)))) {
    throw std::runtime_error("degenerate rotation average");
  }
  const Mat inv_sqrt = es.eigenvectors() *
                       evals.cwiseSqrt().cwiseInverse().asDiagonal() *
                       es.eigenvectors().transpose();
  Mat polar = abar * inv_sqrt;
  if (polar.determinant() < 0.0) {
    throw std::runtime_error("degenerate rotation average");
  }
  return polar;
}

}  // namespace palign
