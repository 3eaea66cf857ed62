// Copyright 2026 The vptdn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vptdn/camera.hpp"
#include "vptdn/image.hpp"
#include "vptdn/lights.hpp"
#include "vptdn/motion.hpp"
#include "vptdn/rng.hpp"
#include "vptdn/volume.hpp"

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

namespace vptdn {

/// Bumped whenever a change alters rendered pixels; part of the reference
/// cache key.
inline constexpr int kRendererVersion = 1;

struct Scene {
  std::shared_ptr<const VolumeGrid> volume;
  TransferFunction tf;
  LightSet lights;
  int max_bounces = 4;
};

struct CollisionEvent {
  enum class Kind { kReal, kEscaped };
  Kind kind = Kind::kEscaped;
  Vec3 point = Vec3::Zero();
  double distance = 0.0;
  MediumProperties medium;

  bool real() const { return kind == Kind::kReal; }
};

/// Delta tracking along `ray` (origin assumed inside or on the medium
/// bounds) up to distance tmax. Tentative steps follow -ln(1-xi)/majorant and
/// are accepted as real with probability mu_t(y)/majorant.
template <class Rng>
CollisionEvent sample_free_path(const Ray& ray, double tmax, const VolumeGrid& grid, const TransferFunction& tf,
                                double majorant, Rng& rng) {
  CollisionEvent ev;
  if (!(majorant > 0.0) || !(tmax > 0.0)) return ev;
  const double inv_majorant = 1.0 / majorant;
  double t = 0.0;
  for (;;) {
    t -= std::log1p(-rng.uniform()) * inv_majorant;
    if (t > tmax) {
      ev.distance = tmax;
      return ev;
    }
    const Vec3 y = ray.at(t);
    const double scalar = grid.sample(y);
    if (rng.uniform() * majorant < tf.extinction(scalar)) {
      ev.kind = CollisionEvent::Kind::kReal;
      ev.point = y;
      ev.distance = t;
      ev.medium = tf.evaluate(scalar);
      return ev;
    }
  }
}

/// One next-event estimate at y: a uniformly chosen point/area light,
/// binary delta-tracking visibility, isotropic phase, divided by the light
/// selection probability. Zero for an empty light set.
Color direct_light(const Vec3& y, const LightSet& lights, const VolumeGrid& grid, const TransferFunction& tf,
                   double majorant, Sampler& rng);

/// Optional trace of the path vertices for inspection in tests.
struct PathVertexChain {
  std::vector<Vec3> vertices;
  std::vector<Color> throughput;
};

struct RadianceSample {
  Color radiance = Color::Zero();
  std::optional<Vec3> first_collision;
  double first_distance = 0.0;
  bool discarded = false;  // non-finite twice; radiance forced to zero
};

/// Random walk for one camera sample. `path_key` keys the per-bounce
/// sample streams.
RadianceSample estimate_radiance(const Ray& ray, const Scene& scene, std::uint64_t path_key,
                                 PathVertexChain* chain = nullptr);

/// Same walk with a caller-supplied majorant (>= max_extinction).
RadianceSample estimate_radiance(const Ray& ray, const Scene& scene, double majorant, std::uint64_t path_key,
                                 PathVertexChain* chain = nullptr);

struct FrameEstimate {
  ImageRGB radiance;            // working-space (XYZ) HDR per pixel
  /// Nearest real collision among the samples that reach the pixel through
  /// the reconstruction filter.
  ImageRGB first_collision;
  ImageMask collision_valid;    // 1 where first_collision holds a point
  std::uint32_t frame = 0;
  std::uint64_t seed = 0;
  std::uint64_t discarded_samples = 0;

  int width() const { return radiance.width(); }
  int height() const { return radiance.height(); }
};

inline constexpr double kPixelFilterSigma = 0.5;
inline constexpr double kPixelFilterRadius = 1.0;

/// spp samples per pixel, reconstructed with a normalized separable
/// Gaussian (sigma 0.5 px, radius 1). Pure function of its arguments.
FrameEstimate render_frame(const Scene& scene, const Camera& camera, int spp, std::uint64_t seed,
                           std::uint32_t frame_index);

/// Velocity from the first-collision buffer: v = proj_prev(x) - proj_cur(x).
/// Identical matrices yield an all-valid zero field.
MotionField compute_motion_field(const FrameEstimate& frame, const Mat4& view_proj_prev, const Mat4& view_proj_cur);

}  // namespace vptdn
