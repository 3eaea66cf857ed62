// Copyright 2026 The vptdn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vptdn/math.hpp"

#include <Eigen/Core>

namespace vptdn {

// D65 linear sRGB <-> CIE XYZ.
inline const Eigen::Matrix3d& rgb_to_xyz_matrix() {
  static const Eigen::Matrix3d m = (Eigen::Matrix3d() << 0.4124564, 0.3575761, 0.1804375,  //
                                    0.2126729, 0.7151522, 0.0721750,                      //
                                    0.0193339, 0.1191920, 0.9503041)
                                       .finished();
  return m;
}

inline const Eigen::Matrix3d& xyz_to_rgb_matrix() {
  static const Eigen::Matrix3d m = (Eigen::Matrix3d() << 3.2404542, -1.5371385, -0.4985314,  //
                                    -0.9692660, 1.8760108, 0.0415560,                       //
                                    0.0556434, -0.2040259, 1.0572252)
                                       .finished();
  return m;
}

inline Color rgb_to_xyz(const Color& rgb) { return (rgb_to_xyz_matrix() * rgb.matrix()).array(); }
inline Color xyz_to_rgb(const Color& xyz) { return (xyz_to_rgb_matrix() * xyz.matrix()).array(); }

/// sRGB opto-electronic transfer function for one linear value in [0,1].
inline double srgb_encode(double v) {
  return v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

/// Rec. 709 luma weights.
inline double luma709(const Color& rgb) { return 0.2126 * rgb[0] + 0.7152 * rgb[1] + 0.0722 * rgb[2]; }

}  // namespace vptdn
