#pragma once

#include <cmath>

namespace okdrop {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3& operator+=(const Vec3& o) noexcept {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr Vec3& operator-=(const Vec3& o) noexcept {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  constexpr Vec3& operator*=(double s) noexcept {
    x *= s;
    y *= s;
    z *= s;
    return *this;
  }

  constexpr double operator[](int i) const noexcept { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr double& operator[](int i) noexcept { return i == 0 ? x : (i == 1 ? y : z); }

  friend constexpr Vec3 operator+(Vec3 a, const Vec3& b) noexcept { return a += b; }
  friend constexpr Vec3 operator-(Vec3 a, const Vec3& b) noexcept { return a -= b; }
  friend constexpr Vec3 operator*(Vec3 a, double s) noexcept { return a *= s; }
  friend constexpr Vec3 operator*(double s, Vec3 a) noexcept { return a *= s; }
  friend constexpr Vec3 operator-(const Vec3& a) noexcept { return {-a.x, -a.y, -a.z}; }
  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr double dot(const Vec3& a, const Vec3& b) noexcept { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(const Vec3& a) noexcept { return std::sqrt(dot(a, a)); }

/// Minimum-image representative of a displacement on the cubic torus of side `side`.
inline Vec3 min_image(const Vec3& d, double side) noexcept {
  const auto wrap = [side](double v) { return v - side * std::nearbyint(v / side); };
  return {wrap(d.x), wrap(d.y), wrap(d.z)};
}

/// Representative of a point in [0, side)^3.
inline Vec3 wrap_into_cell(const Vec3& p, double side) noexcept {
  const auto wrap = [side](double v) {
    double w = v - side * std::floor(v / side);
    return w >= side ? 0.0 : w;
  };
  return {wrap(p.x), wrap(p.y), wrap(p.z)};
}

inline double torus_distance(const Vec3& a, const Vec3& b, double side) noexcept {
  return norm(min_image(a - b, side));
}

}  // namespace okdrop
