// Copyright 2026 The vptdn Authors
// SPDX-License-Identifier: Apache-2.0

#include "vptdn/camera.hpp"

#include <stdexcept>

namespace vptdn {

namespace {
constexpr double kNear = 1e-3;
constexpr double kFar = 1e4;
}  // namespace

Camera Camera::look_at(const Vec3& position, const Vec3& target, const Vec3& up_hint, double fov_y, int width,
                       int height) {
  if (!(fov_y > 0.0 && fov_y < kPi)) throw std::invalid_argument("camera fov must lie in (0, pi)");
  if (width <= 0 || height <= 0) throw std::invalid_argument("camera image dims must be positive");
  const Vec3 fwd = target - position;
  if (!(fwd.norm() > 0.0)) throw std::invalid_argument("camera target coincides with position");
  Camera c;
  c.position_ = position;
  c.forward_ = fwd.normalized();
  Vec3 right = c.forward_.cross(up_hint);
  if (right.norm() < 1e-9) {
    // Looking along the up hint; pick any perpendicular.
    right = c.forward_.cross(std::abs(c.forward_.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitZ());
  }
  c.right_ = right.normalized();
  c.up_ = c.right_.cross(c.forward_).normalized();
  c.fov_y_ = fov_y;
  c.width_ = width;
  c.height_ = height;
  return c;
}

Ray Camera::generate_ray(int px, int py, double jitter_x, double jitter_y) const {
  const double tan_half = std::tan(0.5 * fov_y_);
  const double aspect = static_cast<double>(width_) / static_cast<double>(height_);
  const double sx = (2.0 * (px + jitter_x) / width_ - 1.0) * tan_half * aspect;
  const double sy = (1.0 - 2.0 * (py + jitter_y) / height_) * tan_half;
  return Ray{position_, (forward_ + sx * right_ + sy * up_).normalized()};
}

Mat4 Camera::view_projection() const {
  Mat4 view = Mat4::Identity();
  view.block<1, 3>(0, 0) = right_.transpose();
  view.block<1, 3>(1, 0) = up_.transpose();
  view.block<1, 3>(2, 0) = -forward_.transpose();
  view(0, 3) = -right_.dot(position_);
  view(1, 3) = -up_.dot(position_);
  view(2, 3) = forward_.dot(position_);

  const double f = 1.0 / std::tan(0.5 * fov_y_);
  const double aspect = static_cast<double>(width_) / static_cast<double>(height_);
  Mat4 proj = Mat4::Zero();
  proj(0, 0) = f / aspect;
  proj(1, 1) = f;
  proj(2, 2) = (kFar + kNear) / (kNear - kFar);
  proj(2, 3) = 2.0 * kFar * kNear / (kNear - kFar);
  proj(3, 2) = -1.0;
  return proj * view;
}

std::optional<Vec2> project_to_pixel(const Mat4& view_proj, const Vec3& world, int width, int height) {
  const Eigen::Vector4d clip = view_proj * world.homogeneous();
  if (!(clip.w() > 0.0)) return std::nullopt;
  const double ndc_x = clip.x() / clip.w();
  const double ndc_y = clip.y() / clip.w();
  const double px = 0.5 * (ndc_x + 1.0) * width - 0.5;
  const double py = 0.5 * (1.0 - ndc_y) * height - 0.5;
  if (!std::isfinite(px) || !std::isfinite(py)) return std::nullopt;
  return Vec2(px, py);
}

}  // namespace vptdn
