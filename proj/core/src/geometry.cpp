#include <vfoa/geometry.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace vfoa {

namespace {
constexpr double kRadToDeg = 180.0 / std::numbers::pi;
}

Direction::Direction(double pan_deg, double tilt_deg) {
  if (!std::isfinite(pan_deg) || !std::isfinite(tilt_deg)) {
    throw InvalidArgument("direction: non-finite angle");
  }
  if (tilt_deg < -90.0 || tilt_deg > 90.0) {
    throw InvalidArgument("direction: tilt " + std::to_string(tilt_deg) + " outside [-90, 90]");
  }
  pan_ = wrap_angle(pan_deg);
  tilt_ = tilt_deg;
}

bool Position3D::finite() const {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
}

double wrap_angle(double deg) {
  double r = std::fmod(deg, 360.0);
  if (r <= -180.0) r += 360.0;
  if (r > 180.0) r -= 360.0;
  return r;
}

double wrap_delta(double a, double b) { return wrap_angle(a - b); }

Vec2 wrap_delta(const Vec2& a, const Vec2& b) {
  return {wrap_delta(a[0], b[0]), wrap_delta(a[1], b[1])};
}

double angular_distance(const Vec2& a, const Vec2& b) {
  return std::hypot(wrap_delta(a[0], b[0]), wrap_delta(a[1], b[1]));
}

double angular_distance(const Direction& a, const Direction& b) {
  return angular_distance(a.vec(), b.vec());
}

Direction direction_from_points(const Position3D& src, const Position3D& dst) {
  const double dx = dst.x - src.x;
  const double dy = dst.y - src.y;
  const double dz = dst.z - src.z;
  const double dist = std::sqrt(dx * dx + dy * dy + dz * dz);
  if (!(dist > kPoleEpsilon)) {
    throw GeometryError("direction_from_points: coincident points");
  }
  const double horizontal = std::hypot(dx, dy);
  const double pan = horizontal < kPoleEpsilon ? 0.0 : std::atan2(dy, dx) * kRadToDeg;
  const double tilt = std::asin(std::clamp(dz / dist, -1.0, 1.0)) * kRadToDeg;
  return {pan, tilt};
}

double unwrap_near(double pan, double reference) {
  return reference + wrap_delta(pan, reference);
}

}  // namespace vfoa
