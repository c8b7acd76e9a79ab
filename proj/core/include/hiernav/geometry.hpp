#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hiernav {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr bool operator==(const Vec2&) const = default;

  double norm() const { return std::hypot(x, y); }
  constexpr double dot(Vec2 o) const { return x * o.x + y * o.y; }
};

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

struct Pose2 {
  Vec2 position;
  double yaw = 0.0;
};

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a + std::numbers::pi, two_pi);
  if (a <= 0.0) a += two_pi;
  return a - std::numbers::pi;
}

/// Axis-aligned rectangle [x0, x1] x [y0, y1] in meters.
struct Rect {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  constexpr double width() const { return x1 - x0; }
  constexpr double height() const { return y1 - y0; }
  constexpr double area() const { return width() * height(); }
  constexpr Vec2 center() const { return {(x0 + x1) / 2.0, (y0 + y1) / 2.0}; }
  constexpr bool valid() const { return x1 > x0 && y1 > y0; }

  /// Closed containment with tolerance.
  constexpr bool contains(Vec2 p, double eps = 1e-9) const {
    return p.x >= x0 - eps && p.x <= x1 + eps && p.y >= y0 - eps && p.y <= y1 + eps;
  }
  constexpr bool strictly_contains(Vec2 p) const {
    return p.x > x0 && p.x < x1 && p.y > y0 && p.y < y1;
  }
  constexpr bool contains(const Rect& r, double eps = 1e-9) const {
    return r.x0 >= x0 - eps && r.x1 <= x1 + eps && r.y0 >= y0 - eps && r.y1 <= y1 + eps;
  }
  /// True when the interiors overlap.
  constexpr bool overlaps(const Rect& r, double eps = 1e-9) const {
    return x0 < r.x1 - eps && r.x0 < x1 - eps && y0 < r.y1 - eps && r.y0 < y1 - eps;
  }
  constexpr bool operator==(const Rect&) const = default;
};

/// Distance from p to the closed rectangle (0 inside).
inline double distance_to_rect(Vec2 p, const Rect& r) {
  const double dx = std::max({r.x0 - p.x, 0.0, p.x - r.x1});
  const double dy = std::max({r.y0 - p.y, 0.0, p.y - r.y1});
  return std::hypot(dx, dy);
}

/// Distance from p to the segment ab.
inline double distance_to_segment(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = ab.dot(ab);
  if (len2 <= 0.0) return distance(p, a);
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return distance(p, a + ab * t);
}

}  // namespace hiernav
