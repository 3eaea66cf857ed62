// Copyright 2026 The vptdn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vptdn/image.hpp"
#include "vptdn/math.hpp"

#include <memory>
#include <vector>

namespace vptdn {

/// Isotropic point emitter; intensity is radiant intensity per steradian.
struct PointLight {
  Vec3 position = Vec3::Zero();
  Color intensity = Color::Zero();
};

/// Two-sided rectangle corner + s*edge0 + t*edge1, s,t in [0,1].
struct AreaLight {
  Vec3 corner = Vec3::Zero();
  Vec3 edge0 = Vec3::UnitX();
  Vec3 edge1 = Vec3::UnitY();
  Color radiance = Color::Zero();

  double area() const { return edge0.cross(edge1).norm(); }
  Vec3 normal() const { return edge0.cross(edge1).normalized(); }
};

/// Background radiance: a constant, optionally modulated by an
/// equirectangular map (+y up, u = 0.5 looking down -z).
struct Environment {
  Color radiance = Color::Zero();
  std::shared_ptr<const ImageRGB> map;

  Color lookup(const Vec3& dir) const;
};

struct LightSet {
  std::vector<PointLight> points;
  std::vector<AreaLight> areas;
  Environment environment;

  /// Emitters reachable by next-event estimation (the environment is not one).
  std::size_t emitter_count() const { return points.size() + areas.size(); }

  /// Throws std::invalid_argument on negative radiance or degenerate area lights.
  void validate() const;
};

}  // namespace vptdn
