#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "palign/types.hpp"

namespace palign {

/// Wraps an angle to the interval (-pi, pi].
double wrap_angle(double theta);

/// Planar rotation by `theta` radians (counter-clockwise).
struct Rotation2 {
  double theta = 0.0;
  Eigen::Matrix2d matrix() const;
};

/// Generalised Euler angles for a 3-d rotation, composed as
/// A = A12(theta12) * A13(theta13) * A23(theta23), where A_ij(t) rotates the
/// (i, j) coordinate plane.
struct EulerAngles3 {
  double theta12 = 0.0;  // (-pi, pi]
  double theta13 = 0.0;  // (-pi/2, pi/2)
  double theta23 = 0.0;  // (-pi, pi]
  Eigen::Matrix3d matrix() const;
};

struct VonMisesParams {
  double nu = 0.0;     // mean direction, radians
  double kappa = 0.0;  // concentration, >= 0
};

Eigen::Matrix2d rotation_matrix_2d(double theta);
Eigen::Matrix3d rotation_matrix_3d(const EulerAngles3& angles);

/// Recovers Euler angles from a rotation matrix; empty when A is not a
/// rotation or is gimbal-locked (|A(2,0)| = 1).
std::optional<EulerAngles3> euler_from_matrix(const Eigen::Matrix3d& A);

/// Exact draw from von Mises(nu, kappa) via the Best/Fisher rejection
/// method; kappa = 0 degenerates to the uniform law on (-pi, pi].
double sample_von_mises(const VonMisesParams& params, Rng& rng);

/// Draw from the density proportional to exp(a cos t + b sin t), i.e. von
/// Mises with nu = atan2(b, a) and kappa = hypot(a, b).
double sample_von_mises_ab(double a, double b, Rng& rng);

/// Uniform draw on (-pi, pi].
double sample_uniform_angle(Rng& rng);

enum class EulerAxis { k12, k13, k23 };

struct TrigCoeffs {
  double a = 0.0;
  double b = 0.0;
};

/// Coefficients such that tr(F^T A(angles)) = a cos(t) + b sin(t) + c as a
/// function of the selected angle t, with c free of t.
TrigCoeffs euler_conditional_coeffs(const Eigen::Matrix3d& F,
                                    const EulerAngles3& angles,
                                    EulerAxis axis);

/// Haar-uniform rotation: theta12, theta23 uniform, theta13 with density
/// proportional to cos(theta13) on (-pi/2, pi/2).
EulerAngles3 sample_uniform_rotation_3d(Rng& rng);

/// Rotation average: the polar part of the elementwise mean, i.e. the mean
/// post-multiplied by the inverse symmetric square root of (Abar^T Abar).
/// Throws std::runtime_error("degenerate rotation average") when the mean is
/// rank-deficient or its polar factor is a reflection.
Mat polar_rotation_mean(const std::vector<Mat>& samples);

}  // namespace palign
