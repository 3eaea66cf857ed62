// Copyright 2026 The vptdn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vptdn/image.hpp"
#include "vptdn/math.hpp"

#include <cstdint>

namespace vptdn {

/// Per-pixel image velocity v_j; the pixel's previous-frame location is
/// j + v_j.
struct MotionField {
  Image<Eigen::Vector2f> velocity;
  ImageMask valid;
  /// Previous and current view-projection were identical; invalid pixels
  /// then keep their models (light/transfer-function edits).
  bool camera_static = false;

  MotionField() = default;
  MotionField(int width, int height, bool all_valid)
      : velocity(width, height, Eigen::Vector2f::Zero()), valid(width, height, all_valid ? 1 : 0),
        camera_static(all_valid) {}

  int width() const { return velocity.width(); }
  int height() const { return velocity.height(); }

  static MotionField zero(int width, int height) { return MotionField(width, height, true); }
};

}  // namespace vptdn
