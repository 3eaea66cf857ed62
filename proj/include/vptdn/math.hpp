// Copyright 2026 The vptdn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

namespace vptdn {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;
using Mat4 = Eigen::Matrix4d;
/// Linear color triple in the working space (CIE XYZ unless stated otherwise).
using Color = Eigen::Array3d;
using Colorf = Eigen::Array3f;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kInvFourPi = 1.0 / (4.0 * std::numbers::pi);

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 dir = Vec3::UnitZ();

  Vec3 at(double t) const { return origin + t * dir; }
};

/// Parametric interval along a ray, t_near <= t_far.
struct Span {
  double t_near = 0.0;
  double t_far = 0.0;
};

struct Aabb {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();

  Vec3 extent() const { return hi - lo; }
  Vec3 center() const { return 0.5 * (lo + hi); }

  bool contains(const Vec3& p) const {
    return p.x() >= lo.x() && p.y() >= lo.y() && p.z() >= lo.z() &&
           p.x() <= hi.x() && p.y() <= hi.y() && p.z() <= hi.z();
  }

  // Slab test. The returned span is clipped to t >= 0, so rays starting
  // inside the box report t_near = 0.
  std::optional<Span> intersect(const Ray& ray) const {
    double t0 = 0.0;
    double t1 = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
      const double inv = 1.0 / ray.dir[a];
      double tn = (lo[a] - ray.origin[a]) * inv;
      double tf = (hi[a] - ray.origin[a]) * inv;
      if (tn > tf) std::swap(tn, tf);
      // NaN from 0 * inf (origin on a slab plane, parallel ray) keeps the
      // previous bound.
      if (tn > t0) t0 = tn;
      if (tf < t1) t1 = tf;
      if (t0 > t1) return std::nullopt;
    }
    return Span{t0, t1};
  }
};

inline Vec3 uniform_sphere(double u1, double u2) {
  const double z = 1.0 - 2.0 * u1;
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  const double phi = 2.0 * kPi * u2;
  return {r * std::cos(phi), r * std::sin(phi), z};
}

inline bool all_finite(const Color& c) { return c.isFinite().all(); }

}  // namespace vptdn
