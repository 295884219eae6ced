#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

namespace biasmap {

using Vec2 = Eigen::Vector2d;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Wraps an angle into [0, 2*pi).
inline double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  // fmod of a tiny negative can land exactly on 2*pi after the add
  if (a >= kTwoPi) a -= kTwoPi;
  return a;
}

/// Signed smallest rotation from angle `from` to angle `to`, in (-pi, pi].
inline double angle_diff(double to, double from) {
  double d = std::fmod(to - from, kTwoPi);
  if (d > kTwoPi / 2.0) d -= kTwoPi;
  if (d <= -kTwoPi / 2.0) d += kTwoPi;
  return d;
}

/// Axis-aligned rectangle in meters. Degenerate extents (zero width or
/// height) are permitted where an operation says so.
struct Rect {
  double xmin = 0.0;
  double ymin = 0.0;
  double xmax = 0.0;
  double ymax = 0.0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  Vec2 center() const { return {0.5 * (xmin + xmax), 0.5 * (ymin + ymax)}; }

  bool contains(const Vec2& p, double tol = 0.0) const {
    return p.x() >= xmin - tol && p.x() <= xmax + tol && p.y() >= ymin - tol &&
           p.y() <= ymax + tol;
  }

  Vec2 clamp(const Vec2& p) const {
    return {std::clamp(p.x(), xmin, xmax), std::clamp(p.y(), ymin, ymax)};
  }
};

}  // namespace biasmap
