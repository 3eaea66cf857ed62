// Copyright 2026 The vptdn Authors
// SPDX-License-Identifier: Apache-2.0

#include "vptdn/lights.hpp"

#include <stdexcept>

namespace vptdn {

Color Environment::lookup(const Vec3& dir) const {
  if (!map || map->empty()) return radiance;
  const double u = std::atan2(dir.x(), -dir.z()) / (2.0 * kPi) + 0.5;
  const double v = std::acos(std::clamp(dir.y(), -1.0, 1.0)) / kPi;
  const int x = std::clamp(static_cast<int>(u * map->width()), 0, map->width() - 1);
  const int y = std::clamp(static_cast<int>(v * map->height()), 0, map->height() - 1);
  return radiance * (*map)(x, y).cast<double>();
}

void LightSet::validate() const {
  auto non_negative = [](const Color& c) { return c.isFinite().all() && (c >= 0.0).all(); };
  for (const PointLight& p : points) {
    if (!non_negative(p.intensity)) throw std::invalid_argument("point light intensity must be >= 0");
  }
  for (const AreaLight& a : areas) {
    if (!non_negative(a.radiance)) throw std::invalid_argument("area light radiance must be >= 0");
    if (!(a.area() > 1e-12)) throw std::invalid_argument("area light edges are degenerate");
  }
  if (!non_negative(environment.radiance)) throw std::invalid_argument("environment radiance must be >= 0");
}

}  // namespace vptdn
