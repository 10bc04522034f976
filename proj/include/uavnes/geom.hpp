#pragma once

#include <cmath>

namespace uavnes {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double norm() const { return std::hypot(x, y); }
  double norm_sq() const { return x * x + y * y; }
};

inline double distance(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

/// Clamps v to the centered square [-half_width, half_width]^2.
inline Vec2 clamp_to_box(const Vec2& v, double half_width) {
  auto clamp = [half_width](double c) {
    if (c < -half_width) return -half_width;
    if (c > half_width) return half_width;
    return c;
  };
  return {clamp(v.x), clamp(v.y)};
}

/// Membership test for a flat-top hexagon with circumradius r centered at c.
inline bool point_in_hex(const Vec2& p, const Vec2& c, double r) {
  const double qx = std::abs(p.x - c.x);
  const double qy = std::abs(p.y - c.y);
  const double s3 = std::sqrt(3.0);
  return qy <= s3 * 0.5 * r && s3 * qx + qy <= s3 * r;
}

}  // namespace uavnes
