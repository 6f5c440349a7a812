#pragma once

#include <cmath>
#include <stdexcept>

namespace gazex {

constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

struct Point2 {
  double x = 0.0;  // m
  double y = 0.0;  // m

  bool operator==(const Point2&) const = default;
  Point2 operator+(const Point2& o) const { return {x + o.x, y + o.y}; }
  Point2 operator-(const Point2& o) const { return {x - o.x, y - o.y}; }
  Point2 operator*(double s) const { return {x * s, y * s}; }
  double dot(const Point2& o) const { return x * o.x + y * o.y; }
  double cross(const Point2& o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
};

// Planar angle in degrees, normalized to (-180, 180].
class AngleDeg {
 public:
  AngleDeg() = default;
  explicit AngleDeg(double degrees) : value_(degrees) {}
  double deg() const { return value_; }
  double rad() const { return deg2rad(value_); }

 private:
  double value_ = 0.0;
};

// Unit-circle encoding of a direction; sidesteps the +/-180 discontinuity.
struct Vislet {
  double cos_component = 1.0;
  double sin_component = 0.0;
};

// Normalizes any finite angle into (-180, 180].
inline AngleDeg wrap_angle(double theta_deg) {
  if (!std::isfinite(theta_deg)) {
    throw std::invalid_argument("wrap_angle: non-finite angle");
  }
  double w = std::fmod(theta_deg, 360.0);
  if (w <= -180.0) w += 360.0;
  if (w > 180.0) w -= 360.0;
  return AngleDeg(w);
}

inline Vislet vislet_of(AngleDeg theta) {
  return {std::cos(theta.rad()), std::sin(theta.rad())};
}

// Minimum speed at which a velocity defines a walking direction; below it
// the previous direction is held.
constexpr double kHeadingSpeedFloor = 0.05;  // m/s

inline AngleDeg heading_from_velocity(const Point2& v, AngleDeg fallback) {
  if (v.norm() < kHeadingSpeedFloor) return fallback;
  return wrap_angle(rad2deg(std::atan2(v.y, v.x)));
}

// Signed perpendicular distance from p to the line through a and b;
// positive on the left of a->b.
inline double lateral_offset(const Point2& p, const Point2& a, const Point2& b) {
  const Point2 ab = b - a;
  const double len = ab.norm();
  if (len == 0.0) {
    throw std::invalid_argument("lateral_offset: degenerate line (a == b)");
  }
  return ab.cross(p - a) / len;
}

}  // namespace gazex
