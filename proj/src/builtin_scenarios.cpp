// Copyright 2026 The vptdn Authors
// SPDX-License-Identifier: Apache-2.0

#include "vptdn/scenario.hpp"

#include <cmath>

namespace vptdn {
namespace {

constexpr double kOrbitRadius = 170.0;
constexpr double kOrbitHeight = 30.0;

Scenario base(const std::string& name, int frames, int size, std::uint64_t seed) {
  Scenario s;
  s.name = name;
  s.volume.source = VolumeSpec::Source::kProcedural;
  s.volume.kind = ProceduralKind::kFbmNoise;
  s.volume.dims = {64, 64, 64};
  s.volume.params.threshold = 0.2;
  s.frames = frames;
  s.width = size;
  s.height = size;
  s.spp = 2;
  s.seed = seed;
  s.reference_spp = 1024;
  s.exposure = 1.5;
  s.transfer_function.push_back({0, TransferFunction(
                                        {
                                            {0.0, Color(0.9, 0.9, 0.9), 0.0},
                                            {0.01, Color(0.95, 0.9, 0.8), 0.05},
                                            {0.04, Color(0.95, 0.85, 0.6), 0.5},
                                            {0.15, Color(0.9, 0.9, 0.95), 1.0},
                                            {1.0, Color(0.9, 0.9, 0.95), 1.0},
                                        },
                                        0.4)});
  LightTrack sky;
  sky.kind = LightKind::kEnvironment;
  sky.keys.push_back({.frame = 0, .power = Color(0.02, 0.025, 0.035)});
  s.lights.push_back(sky);
  return s;
}

CameraKey orbit_key(int frame, double degrees) {
  const double a = degrees * kPi / 180.0;
  CameraKey k;
  k.frame = frame;
  k.position = Vec3(kOrbitRadius * std::sin(a), kOrbitHeight, kOrbitRadius * std::cos(a));
  k.target = Vec3::Zero();
  k.fov_deg = 40.0;
  return k;
}

LightTrack key_light() {
  LightTrack t;
  t.kind = LightKind::kPoint;
  t.keys.push_back({.frame = 0, .position = Vec3(90, 80, 70), .power = Color(1.0, 0.85, 0.7) * 150000.0});
  return t;
}

}  // namespace

std::vector<Scenario> builtin_scenarios() {
  std::vector<Scenario> out;

  // Camera sweeps 30 degrees around the volume.
  Scenario orbit = base("camera-orbit", 60, 256, 11);
  for (int t = 0; t < orbit.frames; ++t) orbit.camera.push_back(orbit_key(t, 0.5 * t));
  orbit.lights.push_back(key_light());
  out.push_back(orbit);

  // A square area light circles the volume while the camera holds still.
  Scenario light = base("light-orbit", 48, 128, 23);
  light.camera.push_back(orbit_key(0, 0.0));
  LightTrack area;
  area.kind = LightKind::kArea;
  for (int t = 0; t < light.frames; ++t) {
    const double a = 2.0 * kPi * t / light.frames;
    const Vec3 center(110.0 * std::sin(a), 40.0, 110.0 * std::cos(a));
    const Vec3 u = Vec3(std::cos(a), 0.0, -std::sin(a)) * 30.0;
    const Vec3 v = Vec3::UnitY() * 30.0;
    area.keys.push_back({.frame = t, .corner = center - 0.5 * (u + v), .edge0 = u, .edge1 = v,
                         .power = Color(1.0, 0.95, 0.9) * 140.0});
  }
  light.lights.push_back(area);
  out.push_back(light);

  // Mid-range opacity is hidden, then pushed up, with camera and light fixed.
  Scenario tf = base("tf-edit", 48, 128, 37);
  tf.camera.push_back(orbit_key(0, 30.0));
  tf.lights.push_back(key_light());
  {
    const TransferFunction start = tf.transfer_function.front().tf;
    auto with_mid = [&](double opacity) {
      auto pts = start.points();
      pts[2].opacity = opacity;
      return TransferFunction(pts, start.density_scale());
    };
    tf.transfer_function = {{0, start}, {24, with_mid(0.05)}, {47, with_mid(0.9)}};
  }
  out.push_back(tf);

  Scenario flicker = base("static-flicker", 64, 128, 41);
  flicker.camera.push_back(orbit_key(0, 20.0));
  flicker.lights.push_back(key_light());
  out.push_back(flicker);

  // Slow orbit rendered at each of kSweepSpp.
  Scenario sweep = base("spp-sweep", 12, 96, 53);
  sweep.spp = 1;
  for (int t = 0; t < sweep.frames; ++t) sweep.camera.push_back(orbit_key(t, 10.0 + 0.5 * t));
  sweep.lights.push_back(key_light());
  out.push_back(sweep);

  for (const Scenario& s : out) s.validate();
  return out;
}

std::optional<Scenario> builtin_scenario(const std::string& name) {
  for (Scenario& s : builtin_scenarios()) {
    if (s.name == name) return s;
  }
  return std::nullopt;
}

}  // namespace vptdn
