// Copyright 2026 The vptdn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vptdn/math.hpp"

#include <nlohmann/json_fwd.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace vptdn {

class VolumeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raw-volume load failure where the byte count disagrees with the metadata.
class SizeMismatchError : public VolumeError {
 public:
  SizeMismatchError(std::uintmax_t expected, std::uintmax_t actual);
  std::uintmax_t expected() const { return expected_; }
  std::uintmax_t actual() const { return actual_; }

 private:
  std::uintmax_t expected_;
  std::uintmax_t actual_;
};

using Dims = std::array<int, 3>;

/// Dense scalar field normalized to [0,1], centered on the world origin.
/// Voxel (i,j,k) has its center at lo + (i+0.5, j+0.5, k+0.5) * spacing,
/// data is x-fastest.
class VolumeGrid {
 public:
  VolumeGrid(Dims dims, Vec3 spacing, std::vector<float> data);

  const Dims& dims() const { return dims_; }
  const Vec3& spacing() const { return spacing_; }
  const Aabb& world_bounds() const { return bounds_; }
  const std::vector<float>& data() const { return data_; }
  float max_value() const { return max_value_; }

  float voxel(int x, int y, int z) const {
    return data_[(static_cast<std::size_t>(z) * dims_[1] + y) * dims_[0] + x];
  }
  Vec3 voxel_center(int x, int y, int z) const {
    return bounds_.lo + Vec3(x + 0.5, y + 0.5, z + 0.5).cwiseProduct(spacing_);
  }

  /// Trilinear interpolation of the eight surrounding voxel centers
  /// (clamp-to-edge inside the half-voxel border), 0 outside world_bounds.
  double sample(const Vec3& p) const;

 private:
  Dims dims_;
  Vec3 spacing_;
  Vec3 inv_spacing_;
  Aabb bounds_;
  std::vector<float> data_;
  float max_value_ = 0.0f;
};

inline double sample_scalar(const VolumeGrid& grid, const Vec3& p) { return grid.sample(p); }

enum class Endianness { kLittle, kBig };

struct VolumeMeta {
  Dims dims{0, 0, 0};
  int bits_per_sample = 8;
  Endianness endianness = Endianness::kLittle;
  Vec3 spacing = Vec3::Ones();
};

VolumeMeta parse_volume_meta(const nlohmann::json& doc);
VolumeMeta load_volume_meta(const std::filesystem::path& sidecar);
nlohmann::json to_json(const VolumeMeta& meta);

/// Headerless x-fastest raw volume; scalars divided by the sample type max.
VolumeGrid load_raw_volume(const std::filesystem::path& path, const VolumeMeta& meta);

enum class ProceduralKind { kConstant, kSphere, kShell, kFbmNoise };

std::string to_string(ProceduralKind kind);
ProceduralKind procedural_kind_from_string(const std::string& name);

struct ProceduralParams {
  double value = 1.0;         // constant
  double radius = 0.4;        // sphere/shell outer radius, fraction of the smallest extent
  double thickness = 0.1;     // shell, same units as radius
  std::uint64_t seed = 7;     // fbm-noise
  int octaves = 5;
  double frequency = 3.0;     // lattice cells across the volume at octave 0
  double threshold = 0.35;    // noise values below this map to 0
  double falloff = 0.45;      // spherical envelope radius, fraction of extent; <= 0 disables
  Vec3 spacing = Vec3::Constant(1.0);

  bool operator==(const ProceduralParams&) const = default;
};

VolumeGrid make_procedural_volume(ProceduralKind kind, Dims dims, const ProceduralParams& params);

/// Optical properties at a point. mu_t is achromatic; color enters via albedo.
struct MediumProperties {
  double mu_t = 0.0;
  Color albedo = Color::Zero();
  Color emission = Color::Zero();
};

struct ControlPoint {
  double position = 0.0;
  Color albedo = Color::Ones();
  double opacity = 0.0;
  Color emission = Color::Zero();

  bool operator==(const ControlPoint& o) const {
    return position == o.position && (albedo == o.albedo).all() && opacity == o.opacity &&
           (emission == o.emission).all();
  }
};

/// Piecewise-linear 1-D transfer function. Extinction is opacity times
/// density_scale.
class TransferFunction {
 public:
  TransferFunction() = default;
  TransferFunction(std::vector<ControlPoint> points, double density_scale);

  /// Throws VolumeError when the invariants do not hold.
  static void validate(const std::vector<ControlPoint>& points, double density_scale);

  const std::vector<ControlPoint>& points() const { return points_; }
  double density_scale() const { return density_scale_; }

  MediumProperties evaluate(double scalar) const;
  double extinction(double scalar) const;
  /// Largest opacity over [0, upper].
  double max_opacity(double upper) const;

  bool operator==(const TransferFunction&) const = default;

 private:
  std::vector<ControlPoint> points_ = {ControlPoint{0.0}, ControlPoint{1.0}};
  double density_scale_ = 1.0;
};

inline MediumProperties evaluate_medium(const TransferFunction& tf, double scalar) {
  return tf.evaluate(scalar);
}

/// Conservative majorant: density_scale * max opacity over [0, max voxel].
double max_extinction(const VolumeGrid& grid, const TransferFunction& tf);

TransferFunction parse_transfer_function(const nlohmann::json& doc);
TransferFunction load_transfer_function(const std::filesystem::path& path);
nlohmann::json to_json(const TransferFunction& tf);

}  // namespace vptdn
