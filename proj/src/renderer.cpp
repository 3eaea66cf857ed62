// Copyright 2026 The vptdn Authors
// SPDX-License-Identifier: Apache-2.0

#include "vptdn/renderer.hpp"

#include "vptdn/parallel.hpp"

#include <array>
#include <atomic>
#include <limits>
#include <stdexcept>

namespace vptdn {

Color direct_light(const Vec3& y, const LightSet& lights, const VolumeGrid& grid, const TransferFunction& tf,
                   double majorant, Sampler& rng) {
  const std::size_t count = lights.emitter_count();
  if (count == 0) return Color::Zero();
  const auto pick = std::min(static_cast<std::size_t>(rng.uniform() * static_cast<double>(count)), count - 1);

  Vec3 to_light;
  Color incident;
  if (pick < lights.points.size()) {
    const PointLight& light = lights.points[pick];
    to_light = light.position - y;
    const double r2 = to_light.squaredNorm();
    if (!(r2 > 0.0)) return Color::Zero();
    incident = light.intensity / r2;
  } else {
    const AreaLight& light = lights.areas[pick - lights.points.size()];
    const double s = rng.uniform();
    const double t = rng.uniform();
    to_light = light.corner + s * light.edge0 + t * light.edge1 - y;
    const double r2 = to_light.squaredNorm();
    if (!(r2 > 0.0)) return Color::Zero();
    const double cos_light = std::abs(light.normal().dot(to_light)) / std::sqrt(r2);
    incident = light.radiance * (cos_light * light.area() / r2);
  }

  const double dist = to_light.norm();
  const Ray shadow{y, to_light / dist};
  if (const auto span = grid.world_bounds().intersect(shadow)) {
    const double t_end = std::min(span->t_far, dist);
    if (t_end > span->t_near) {
      const Ray seg{shadow.at(span->t_near), shadow.dir};
      if (sample_free_path(seg, t_end - span->t_near, grid, tf, majorant, rng).real()) return Color::Zero();
    }
  }
  return incident * (kInvFourPi * static_cast<double>(count));
}

RadianceSample estimate_radiance(const Ray& camera_ray, const Scene& scene, std::uint64_t path_key,
                                 PathVertexChain* chain) {
  return estimate_radiance(camera_ray, scene, max_extinction(*scene.volume, scene.tf), path_key, chain);
}

RadianceSample estimate_radiance(const Ray& camera_ray, const Scene& scene, double majorant, std::uint64_t path_key,
                                 PathVertexChain* chain) {
  RadianceSample out;
  const VolumeGrid& grid = *scene.volume;
  const int max_bounces = std::max(1, scene.max_bounces);
  Color throughput = Color::Ones();
  Ray ray = camera_ray;
  if (chain) {
    chain->vertices.assign(1, ray.origin);
    chain->throughput.assign(1, throughput);
  }

  for (int bounce = 0;; ++bounce) {
    Sampler rng(combine_key(path_key, static_cast<std::uint64_t>(bounce)));
    const auto span = grid.world_bounds().intersect(ray);
    CollisionEvent ev;
    if (span && majorant > 0.0 && span->t_far > span->t_near) {
      const Ray inside{ray.at(span->t_near), ray.dir};
      ev = sample_free_path(inside, span->t_far - span->t_near, grid, scene.tf, majorant, rng);
      ev.distance += span->t_near;
    }
    if (!ev.real()) {
      out.radiance += throughput * scene.lights.environment.lookup(ray.dir);
      break;
    }
    if (bounce == 0) {
      out.first_collision = ev.point;
      out.first_distance = ev.distance;
    }
    const Color& albedo = ev.medium.albedo;
    out.radiance += throughput * (Color::Ones() - albedo) * ev.medium.emission;
    out.radiance += throughput * albedo * direct_light(ev.point, scene.lights, grid, scene.tf, majorant, rng);
    throughput *= albedo;
    if (chain) {
      chain->vertices.push_back(ev.point);
      chain->throughput.push_back(throughput);
    }
    if (bounce + 1 >= max_bounces || (throughput == 0.0).all()) break;
    ray = Ray{ev.point, uniform_sphere(rng.uniform(), rng.uniform())};
  }
  return out;
}

namespace {

// Splat footprint: a sample in pixel p contributes to p + (dx, dy) for
// dx, dy in {-1, 0, 1}.
constexpr int kTaps = 9;

double filter_weight(double offset) {
  if (std::abs(offset) > kPixelFilterRadius) return 0.0;
  return std::exp(-offset * offset / (2.0 * kPixelFilterSigma * kPixelFilterSigma));
}

bool usable(const Color& c) { return c.isFinite().all() && (c >= 0.0).all(); }

}  // namespace

FrameEstimate render_frame(const Scene& scene, const Camera& camera, int spp, std::uint64_t seed,
                           std::uint32_t frame_index) {
  if (spp < 1) throw std::invalid_argument("render_frame: spp must be >= 1");
  if (!scene.volume) throw std::invalid_argument("render_frame: scene has no volume");
  const int width = camera.width();
  const int height = camera.height();
  const double majorant = max_extinction(*scene.volume, scene.tf);

  // Per source pixel, the weighted radiance sum (xyz) and weight (w) for
  // each of the nine target taps.
  std::vector<std::array<Eigen::Array4d, kTaps>> partial(static_cast<std::size_t>(width) * height);
  // Nearest real collision per source pixel and tap, over the samples that
  // carry weight into that tap's target pixel.
  struct TapHit {
    double distance = std::numeric_limits<double>::infinity();
    Vec3 point = Vec3::Zero();
  };
  std::vector<std::array<TapHit, kTaps>> hits(static_cast<std::size_t>(width) * height);

  FrameEstimate out;
  out.frame = frame_index;
  out.seed = seed;
  out.radiance = ImageRGB(width, height, Colorf::Zero());
  out.first_collision = ImageRGB(width, height, Colorf::Zero());
  out.collision_valid = ImageMask(width, height, 0);
  std::atomic<std::uint64_t> discarded{0};

  parallel_for(0, height, [&](int y) {
    std::uint64_t row_discarded = 0;
    for (int x = 0; x < width; ++x) {
      const std::size_t pixel = out.radiance.index(x, y);
      auto& taps = partial[pixel];
      for (auto& t : taps) t.setZero();
      auto& tap_hits = hits[pixel];

      for (int s = 0; s < spp; ++s) {
        Sampler jitter(stream_key(seed, frame_index, pixel, static_cast<std::uint64_t>(s), Purpose::kCameraJitter));
        const double jx = jitter.uniform();
        const double jy = jitter.uniform();
        const Ray ray = camera.generate_ray(x, y, jx, jy);
        RadianceSample rs =
            estimate_radiance(ray, scene, majorant, stream_key(seed, frame_index, pixel, static_cast<std::uint64_t>(s), Purpose::kPath));
        if (!usable(rs.radiance)) {
          rs = estimate_radiance(
              ray, scene, majorant, stream_key(seed, frame_index, pixel, static_cast<std::uint64_t>(s), Purpose::kResample));
          if (!usable(rs.radiance)) {
            rs.radiance = Color::Zero();
            ++row_discarded;
          }
        }
        double wx[3], wy[3];
        for (int d = -1; d <= 1; ++d) {
          wx[d + 1] = filter_weight(jx - 0.5 - d);
          wy[d + 1] = filter_weight(jy - 0.5 - d);
        }
        for (int dy = 0; dy < 3; ++dy) {
          for (int dx = 0; dx < 3; ++dx) {
            const double w = wx[dx] * wy[dy];
            if (w == 0.0) continue;
            const auto tap = static_cast<std::size_t>(dy * 3 + dx);
            taps[tap] += Eigen::Array4d(w * rs.radiance[0], w * rs.radiance[1], w * rs.radiance[2], w);
            if (rs.first_collision && rs.first_distance < tap_hits[tap].distance) {
              tap_hits[tap] = {rs.first_distance, *rs.first_collision};
            }
          }
        }
      }
    }
    discarded.fetch_add(row_discarded, std::memory_order_relaxed);
  });

  parallel_for(0, height, [&](int y) {
    for (int x = 0; x < width; ++x) {
      Eigen::Array4d acc = Eigen::Array4d::Zero();
      const TapHit* nearest = nullptr;
      // Source pixels in ascending index order; strict < keeps the lowest
      // source pixel (then sample) on equal distances.
      for (int dy = 1; dy >= -1; --dy) {
        for (int dx = 1; dx >= -1; --dx) {
          const int sx = x - dx;
          const int sy = y - dy;
          if (!out.radiance.in_bounds(sx, sy)) continue;
          const std::size_t src = out.radiance.index(sx, sy);
          const auto tap = static_cast<std::size_t>((dy + 1) * 3 + (dx + 1));
          acc += partial[src][tap];
          const TapHit& hit = hits[src][tap];
          if (hit.distance < (nearest ? nearest->distance : std::numeric_limits<double>::infinity())) nearest = &hit;
        }
      }
      const Color c = acc.head<3>() / acc[3];
      out.radiance(x, y) = c.cast<float>();
      if (nearest) {
        out.first_collision(x, y) = nearest->point.cast<float>().array();
        out.collision_valid(x, y) = 1;
      }
    }
  });
  out.discarded_samples = discarded.load();
  return out;
}

MotionField compute_motion_field(const FrameEstimate& frame, const Mat4& view_proj_prev, const Mat4& view_proj_cur) {
  const int width = frame.width();
  const int height = frame.height();
  if (view_proj_prev == view_proj_cur) return MotionField::zero(width, height);
  MotionField motion(width, height, false);
  parallel_for(0, height, [&](int y) {
    for (int x = 0; x < width; ++x) {
      if (!frame.collision_valid(x, y)) continue;
      const Vec3 world = frame.first_collision(x, y).cast<double>().matrix();
      const auto prev = project_to_pixel(view_proj_prev, world, width, height);
      const auto cur = project_to_pixel(view_proj_cur, world, width, height);
      if (!prev || !cur) continue;
      const Vec2 v = *prev - *cur;
      if (!v.allFinite()) continue;
      motion.velocity(x, y) = v.cast<float>();
      motion.valid(x, y) = 1;
    }
  });
  return motion;
}

}  // namespace vptdn
