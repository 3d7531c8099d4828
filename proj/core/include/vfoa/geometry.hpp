#pragma once

// Angle conventions shared by the whole library.
//
// World frame: x forward, y left, z up (meters). A direction is a (pan, tilt)
// pair in degrees: pan is the azimuth measured counter-clockwise from +x in the
// horizontal plane, tilt the elevation above that plane. Positive pan turns
// toward +y, positive tilt looks up.

#include <vfoa/types.hpp>

namespace vfoa {

/// Horizontal distance below which a direction is treated as vertical (pan := 0).
inline constexpr double kPoleEpsilon = 1e-9;

class Direction {
 public:
  Direction() = default;
  /// Wraps pan into (-180, 180]; throws InvalidArgument for tilt outside [-90, 90]
  /// or non-finite input.
  Direction(double pan_deg, double tilt_deg);

  double pan() const { return pan_; }
  double tilt() const { return tilt_; }
  Vec2 vec() const { return {pan_, tilt_}; }

  bool operator==(const Direction&) const = default;

 private:
  double pan_ = 0.0;
  double tilt_ = 0.0;
};

struct Position3D {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  bool finite() const;
  bool operator==(const Position3D&) const = default;
};

/// Wraps an angle into (-180, 180].
double wrap_angle(double deg);

/// (a - b) wrapped into (-180, 180].
double wrap_delta(double a, double b);

/// Component-wise wrapped difference of two (pan, tilt) vectors.
Vec2 wrap_delta(const Vec2& a, const Vec2& b);

/// Euclidean norm of the wrapped (pan, tilt) difference.
double angular_distance(const Direction& a, const Direction& b);
double angular_distance(const Vec2& a, const Vec2& b);

/// Direction of the ray from src to dst. Throws GeometryError when the points
/// are closer than 1e-9 m.
Direction direction_from_points(const Position3D& src, const Position3D& dst);

/// Shifts `pan` by a multiple of 360 so that it lies within 180 degrees of `reference`.
double unwrap_near(double pan, double reference);

}  // namespace vfoa
