// Copyright 2026 The vptdn Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "vptdn/parallel.hpp"
#include "vptdn/renderer.hpp"

#include <cmath>
#include <random>

using namespace vptdn;
using vptdn::testing::box_chord;
using vptdn::testing::constant_box_scene;

namespace {

// Homogeneous medium far larger than any sampled distance.
Scene unbounded_medium(double mu) {
  return constant_box_scene(Vec3::Constant(1e6), mu, Color::Constant(0.5), Color::Zero(), 1);
}

Scene empty_scene(const Color& env) {
  Scene scene = constant_box_scene(Vec3::Ones(), 1.0, Color::Ones(), Color::Zero(), 4);
  scene.volume = std::make_shared<VolumeGrid>(Dims{2, 2, 2}, Vec3::Ones(), std::vector<float>(8, 0.0f));
  scene.lights.environment.radiance = env;
  return scene;
}

Scene lit_cloud() {
  Scene scene = constant_box_scene(Vec3(1.0, 0.8, 0.6), 1.5, Color(0.9, 0.8, 0.7), Color::Zero(), 4);
  scene.lights.points.push_back(PointLight{Vec3(2.0, 2.0, 2.0), Color(20.0, 18.0, 15.0)});
  scene.lights.environment.radiance = Color(0.1, 0.1, 0.12);
  return scene;
}

Camera front_camera(int w, int h, double fov_deg = 40.0) {
  return Camera::look_at(Vec3(0.3, 0.4, 4.0), Vec3::Zero(), Vec3::UnitY(), fov_deg * kPi / 180.0, w, h);
}

}  // namespace

TEST_CASE("camera rays") {
  const Camera cam = Camera::look_at(Vec3(1, 2, 3), Vec3(0, 0, 0), Vec3::UnitY(), 0.7, 17, 17);
  const Ray center = cam.generate_ray(8, 8, 0.5, 0.5);
  CHECK((center.dir - cam.forward()).norm() < 1e-12);

  const Ray a = cam.generate_ray(3, 5, 0.0, 0.0);
  const Ray b = cam.generate_ray(3, 5, 1.0 - 1e-9, 1.0 - 1e-9);
  CHECK((a.dir - b.dir).norm() > 1e-3);
  const Ray next = cam.generate_ray(4, 6, 0.0, 0.0);
  CHECK((b.dir - next.dir).norm() < 1e-6);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const Ray r = cam.generate_ray(static_cast<int>(u(rng) * 17), static_cast<int>(u(rng) * 17), u(rng), u(rng));
    REQUIRE(std::abs(r.dir.norm() - 1.0) < 1e-12);
  }
}

TEST_CASE("free path distances follow the exponential law") {
  const Scene scene = unbounded_medium(1.0);
  const double majorant = max_extinction(*scene.volume, scene.tf);
  REQUIRE(majorant == doctest::Approx(1.0));
  std::vector<double> d;
  const Ray ray{Vec3::Zero(), Vec3(0.0, 0.6, 0.8)};
  for (std::uint64_t i = 0; i < 100000; ++i) {
    Sampler rng(combine_key(11, i));
    const CollisionEvent ev = sample_free_path(ray, 1e5, *scene.volume, scene.tf, majorant, rng);
    REQUIRE(ev.real());
    d.push_back(ev.distance);
  }
  const double p = testing::ks_pvalue(d, [](double x) { return 1.0 - std::exp(-x); });
  CHECK(p > 0.01);
}

TEST_CASE("a loose majorant keeps the free path law") {
  // mu_t = 1 sampled under a majorant of 3: two thirds of the steps are null.
  const Scene scene = unbounded_medium(1.0);
  std::vector<double> d;
  const Ray ray{Vec3::Zero(), Vec3::UnitX()};
  for (std::uint64_t i = 0; i < 20000; ++i) {
    Sampler rng(combine_key(12, i));
    d.push_back(sample_free_path(ray, 1e5, *scene.volume, scene.tf, 3.0, rng).distance);
  }
  CHECK(testing::ks_pvalue(d, [](double x) { return 1.0 - std::exp(-x); }) > 0.01);
}

TEST_CASE("an all-zero volume never collides") {
  const Scene scene = empty_scene(Color::Ones());
  Sampler rng(5);
  for (int i = 0; i < 1000; ++i) {
    const CollisionEvent ev =
        sample_free_path(Ray{Vec3(-1, 0, 0), Vec3::UnitX()}, 2.0, *scene.volume, scene.tf, 1.0, rng);
    REQUIRE_FALSE(ev.real());
  }
}

TEST_CASE("a zero uniform gives a zero tentative step") {
  struct Zeros {
    int calls = 0;
    double uniform() { return calls++ == 0 ? 0.0 : 0.999; }
  } rng;
  const Scene scene = unbounded_medium(1.0);
  const CollisionEvent ev =
      sample_free_path(Ray{Vec3::Zero(), Vec3::UnitX()}, 10.0, *scene.volume, scene.tf, 1.0, rng);
  REQUIRE(ev.real());
  CHECK(ev.distance == 0.0);
}

TEST_CASE("direct light through empty space is inverse square times the phase") {
  Scene scene = empty_scene(Color::Zero());
  const Color intensity(3.0, 2.0, 1.0);
  scene.lights.points.push_back(PointLight{Vec3(0.0, 0.0, 5.0), intensity});
  Sampler rng(9);
  const Vec3 y(0.2, -0.1, 0.3);
  const double r2 = (Vec3(0.0, 0.0, 5.0) - y).squaredNorm();
  const Color expected = intensity / (4.0 * kPi * r2);
  const double mean = [&] {
    Color acc = Color::Zero();
    for (int i = 0; i < 100000; ++i) acc += direct_light(y, scene.lights, *scene.volume, scene.tf, 1.0, rng);
    return (acc / 100000.0 - expected).abs().maxCoeff();
  }();
  CHECK(mean < 1e-12);

  LightSet none;
  CHECK((direct_light(y, none, *scene.volume, scene.tf, 1.0, rng) == 0.0).all());
}

TEST_CASE("binary visibility matches Beer-Lambert through a slab") {
  // Slab of depth 2 along x with mu_t 0.5; y sits on its near face.
  Scene scene = constant_box_scene(Vec3(1.0, 50.0, 50.0), 0.5, Color::Ones(), Color::Zero(), 1);
  const Vec3 y(-1.0, 0.0, 0.0);
  const Vec3 light(6.0, 0.0, 0.0);
  scene.lights.points.push_back(PointLight{light, Color::Ones()});
  const double unoccluded = 1.0 / (4.0 * kPi * (light - y).squaredNorm());
  const int n = 100000;
  double hits = 0.0;
  for (int i = 0; i < n; ++i) {
    Sampler rng(combine_key(21, static_cast<std::uint64_t>(i)));
    hits += direct_light(y, scene.lights, *scene.volume, scene.tf, 0.5, rng)[0] / unoccluded;
  }
  const double mean = hits / n;
  const double expected = std::exp(-1.0);
  const double se = std::sqrt(expected * (1.0 - expected) / n);
  CHECK(std::abs(mean - expected) < 3.0 * se);
}

TEST_CASE("empty volume returns the environment exactly") {
  const Color env(0.3, 0.5, 0.7);
  const Scene scene = empty_scene(env);
  for (std::uint64_t i = 0; i < 100; ++i) {
    const RadianceSample s = estimate_radiance(Ray{Vec3(0, 0, 5), Vec3(0.1, 0.0, -1.0).normalized()}, scene, i);
    CHECK((s.radiance == env).all());
    CHECK_FALSE(s.first_collision.has_value());
  }
  const FrameEstimate frame = render_frame(scene, front_camera(12, 9), 3, 4, 0);
  for (std::size_t i = 0; i < frame.radiance.size(); ++i) {
    REQUIRE((frame.radiance[i].cast<double>() - env).abs().maxCoeff() < 1e-6);
    REQUIRE(frame.collision_valid[i] == 0);
  }
}

TEST_CASE("absorbing emitting medium matches the closed form along one ray") {
  const double mu = 0.8;
  const Color le(1.0, 0.9, 0.8);
  const Color env(0.2, 0.3, 0.4);
  Scene scene = constant_box_scene(Vec3(1.0, 0.7, 0.5), mu, Color::Zero(), le, 4);
  scene.lights.environment.radiance = env;
  const Ray ray{Vec3(-0.3, -2.0, 3.0), Vec3(0.1, 0.5, -0.8).normalized()};
  const double z = box_chord(ray.origin, ray.dir, Vec3(-1.0, -0.7, -0.5), Vec3(1.0, 0.7, 0.5));
  REQUIRE(z > 0.5);
  const double tr = std::exp(-mu * z);
  const Color expected = (1.0 - tr) * le + tr * env;

  const int n = 1000000;
  Color sum = Color::Zero();
  Color sum2 = Color::Zero();
  for (int i = 0; i < n; ++i) {
    const Color s = estimate_radiance(ray, scene, combine_key(31, static_cast<std::uint64_t>(i))).radiance;
    sum += s;
    sum2 += s * s;
  }
  const Color mean = sum / n;
  const Color se = ((sum2 / n - mean * mean) / n).sqrt();
  for (int c = 0; c < 3; ++c) CHECK(std::abs(mean[c] - expected[c]) < 3.0 * se[c]);
}

TEST_CASE("path throughput never increases") {
  const Scene scene = lit_cloud();
  for (std::uint64_t i = 0; i < 2000; ++i) {
    PathVertexChain chain;
    estimate_radiance(Ray{Vec3(0.1, 0.2, 3.0), Vec3(-0.02, -0.05, -1.0).normalized()}, scene, i, &chain);
    REQUIRE(chain.vertices.size() == chain.throughput.size());
    REQUIRE(chain.vertices.size() <= static_cast<std::size_t>(scene.max_bounces) + 1);
    for (std::size_t k = 1; k < chain.throughput.size(); ++k) {
      REQUIRE((chain.throughput[k] <= chain.throughput[k - 1]).all());
    }
  }
}

TEST_CASE("isotropic phase integrates to one") {
  // Estimate the integral of 1/(4 pi) over the sphere by stratified cube
  // rejection sampling, independent of the renderer's direction sampler.
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = 2000000;
  int inside = 0;
  for (int i = 0; i < n; ++i) {
    const double x = u(rng), y = u(rng), z = u(rng);
    if (x * x + y * y + z * z <= 1.0) ++inside;
  }
  // Unit ball volume is (4/3) pi, so its surface area is 3 * volume.
  const double area = 3.0 * 8.0 * inside / n;
  CHECK(area * kInvFourPi == doctest::Approx(1.0).epsilon(1e-3));

  // The renderer's sampler is uniform: each octant and hemisphere holds an
  // equal share, and E[z^2] = 1/3.
  Sampler s(4);
  double up = 0.0, z2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const Vec3 d = uniform_sphere(s.uniform(), s.uniform());
    REQUIRE(std::abs(d.norm() - 1.0) < 1e-12);
    up += d.y() > 0.0;
    z2 += d.z() * d.z();
  }
  CHECK(up / n == doctest::Approx(0.5).epsilon(2e-3));
  CHECK(z2 / n == doctest::Approx(1.0 / 3.0).epsilon(2e-3));
}

TEST_CASE("render_frame is deterministic across worker counts") {
  const Scene scene = lit_cloud();
  const Camera cam = front_camera(24, 16);
  set_worker_count(1);
  const FrameEstimate a = render_frame(scene, cam, 2, 77, 3);
  set_worker_count(4);
  const FrameEstimate b = render_frame(scene, cam, 2, 77, 3);
  set_worker_count(0);
  CHECK(a.radiance == b.radiance);
  CHECK(a.first_collision == b.first_collision);
  CHECK(a.collision_valid == b.collision_valid);
  CHECK(hash_image(a.radiance) == hash_image(b.radiance));

  const FrameEstimate other_frame = render_frame(scene, cam, 2, 77, 4);
  CHECK_FALSE(other_frame.radiance == a.radiance);
}

TEST_CASE("doubling spp halves the per-pixel variance") {
  const Scene scene = lit_cloud();
  const Camera cam = front_camera(16, 16, 25.0);
  auto mean_variance = [&](int spp) {
    const int reps = 64;
    std::vector<double> sum(256, 0.0), sum2(256, 0.0);
    for (int r = 0; r < reps; ++r) {
      const FrameEstimate f = render_frame(scene, cam, spp, 1000 + static_cast<std::uint64_t>(r), 0);
      for (std::size_t i = 0; i < 256; ++i) {
        const double v = f.radiance[i][1];
        sum[i] += v;
        sum2[i] += v * v;
      }
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < 256; ++i) acc += (sum2[i] - sum[i] * sum[i] / reps) / (reps - 1);
    return acc / 256.0;
  };
  const double ratio = mean_variance(4) / mean_variance(8);
  CHECK(ratio == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("first collision is the nearest over the pixel footprint") {
  const Scene scene = lit_cloud();
  const Camera cam = front_camera(10, 8);
  const FrameEstimate f = render_frame(scene, cam, 4, 5, 0);
  int valid = 0;
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 10; ++x) {
      if (!f.collision_valid(x, y)) continue;
      ++valid;
      const Vec3 p = f.first_collision(x, y).cast<double>();
      const Aabb& b = scene.volume->world_bounds();
      REQUIRE(Aabb{b.lo - Vec3::Constant(1e-5), b.hi + Vec3::Constant(1e-5)}.contains(p));
    }
  }
  CHECK(valid > 40);
}

TEST_CASE("motion field") {
  // Wall of very dense medium whose front face is the plane z = 0.5.
  const Scene wall = constant_box_scene(Vec3(4.0, 4.0, 0.5), 1e4, Color::Constant(0.5), Color::Zero(), 1);
  const int w = 32, h = 32;
  const double fov = 30.0 * kPi / 180.0;
  const Camera cur = Camera::look_at(Vec3(0, 0, 10), Vec3(0, 0, 0), Vec3::UnitY(), fov, w, h);

  SUBCASE("identical cameras give zero valid motion") {
    const FrameEstimate f = render_frame(wall, cur, 1, 1, 0);
    const MotionField m = compute_motion_field(f, cur.view_projection(), cur.view_projection());
    for (std::size_t i = 0; i < m.valid.size(); ++i) {
      REQUIRE(m.valid[i] == 1);
      REQUIRE(m.velocity[i].isZero());
    }
  }

  SUBCASE("one pixel of translation over a plane") {
    const double depth = 10.0 - 0.5;
    const double pixel_width = 2.0 * depth * std::tan(0.5 * fov) / h;
    const Camera moved =
        Camera::look_at(Vec3(pixel_width, 0, 10), Vec3(pixel_width, 0, 0), Vec3::UnitY(), fov, w, h);
    const FrameEstimate f = render_frame(wall, moved, 1, 2, 1);
    const MotionField m = compute_motion_field(f, cur.view_projection(), moved.view_projection());
    for (std::size_t i = 0; i < m.valid.size(); ++i) {
      REQUIRE(m.valid[i] == 1);
      REQUIRE(std::abs(m.velocity[i].x() - 1.0) < 0.05);
      REQUIRE(std::abs(m.velocity[i].y()) < 0.05);
    }
  }

  SUBCASE("sky pixels are invalid with zero velocity") {
    const Scene small = constant_box_scene(Vec3(0.5, 0.5, 0.5), 1e4, Color::Constant(0.5), Color::Zero(), 1);
    const Camera moved = Camera::look_at(Vec3(0.1, 0, 10), Vec3(0.1, 0, 0), Vec3::UnitY(), fov, w, h);
    const FrameEstimate f = render_frame(small, moved, 1, 3, 1);
    const MotionField m = compute_motion_field(f, cur.view_projection(), moved.view_projection());
    CHECK(m.valid(0, 0) == 0);
    CHECK(m.velocity(0, 0).isZero());
    CHECK(m.valid(w / 2, h / 2) == 1);
  }
}

TEST_CASE("single scattering sphere against the quadrature oracle") {
  const auto c = testing::load_single_scatter();
  const FrameEstimate f = render_frame(c.scene, c.camera, 4000, 123, 0);
  double worst = 0.0;
  for (std::size_t i = 0; i < c.expected.size(); ++i) {
    const Color got = f.radiance[i].cast<double>();
    worst = std::max(worst, ((got - c.expected[i]).abs() / c.expected[i]).maxCoeff());
  }
  MESSAGE("worst relative error at 4000 spp: " << worst);
  CHECK(worst < 0.05);
}
