#pragma once

#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace palign {

using Rng = std::mt19937_64;

// Point dimension is 2 or 3 at runtime; bounded-dynamic Eigen types keep
// vector arithmetic on the stack in the sampler hot loops.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 3, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 3, 3>;

// Thrown for bad user input (files, flags, dimensions). The CLI maps it to
// exit status 1; any other exception maps to 2.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace palign
