// Copyright 2026 The vptdn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vptdn/math.hpp"

#include <optional>

namespace vptdn {

/// Pinhole camera. Pixel (x, y) covers [x, x+1) x [y, y+1) on the film with
/// row 0 at the top; jitter (0.5, 0.5) is the pixel center.
class Camera {
 public:
  Camera() = default;

  /// Throws std::invalid_argument for a degenerate basis or fov outside (0, pi).
  static Camera look_at(const Vec3& position, const Vec3& target, const Vec3& up_hint, double fov_y, int width,
                        int height);

  const Vec3& position() const { return position_; }
  const Vec3& forward() const { return forward_; }
  const Vec3& up() const { return up_; }
  const Vec3& right() const { return right_; }
  double fov_y() const { return fov_y_; }
  int width() const { return width_; }
  int height() const { return height_; }

  Ray generate_ray(int px, int py, double jitter_x, double jitter_y) const;

  /// World -> clip transform; clip w is the depth along forward.
  Mat4 view_projection() const;

 private:
  Vec3 position_ = Vec3::Zero();
  Vec3 forward_ = -Vec3::UnitZ();
  Vec3 up_ = Vec3::UnitY();
  Vec3 right_ = Vec3::UnitX();
  double fov_y_ = kPi / 4.0;
  int width_ = 1;
  int height_ = 1;
};

inline Ray generate_camera_ray(const Camera& camera, int px, int py, double jx, double jy) {
  return camera.generate_ray(px, py, jx, jy);
}

/// Continuous pixel-index coordinates of a world point (the center of pixel
/// j maps to j), or nullopt when the point is at or behind the camera plane.
std::optional<Vec2> project_to_pixel(const Mat4& view_proj, const Vec3& world, int width, int height);

}  // namespace vptdn
