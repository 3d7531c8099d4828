#pragma once

#include <Eigen/Core>
#include <Eigen/LU>
#include <stdexcept>
#include <string>

namespace vfoa {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Vec8 = Eigen::Matrix<double, 8, 1>;
using Mat8 = Eigen::Matrix<double, 8, 8>;
using Mat28 = Eigen::Matrix<double, 2, 8>;

// Offsets of the four 2-blocks inside the stacked latent state L = [G; Gdot; R; Rdot].
inline constexpr int kGaze = 0;
inline constexpr int kGazeVel = 2;
inline constexpr int kRef = 4;
inline constexpr int kRefVel = 6;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Coincident points or otherwise undefined directions.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Invalid arguments or violated preconditions on domain objects.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Singular or ill-conditioned matrices encountered during filtering or learning.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Malformed input files; messages carry the offending line or field.
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace vfoa
