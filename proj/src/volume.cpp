// Copyright 2026 The vptdn Authors
// SPDX-License-Identifier: Apache-2.0

#include "vptdn/volume.hpp"

#include "vptdn/json_util.hpp"
#include "vptdn/rng.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

namespace vptdn {

SizeMismatchError::SizeMismatchError(std::uintmax_t expected, std::uintmax_t actual)
    : VolumeError("raw volume size mismatch: expected " + std::to_string(expected) + " bytes, got " +
                  std::to_string(actual)),
      expected_(expected),
      actual_(actual) {}

VolumeGrid::VolumeGrid(Dims dims, Vec3 spacing, std::vector<float> data)
    : dims_(dims), spacing_(spacing), data_(std::move(data)) {
  for (int a = 0; a < 3; ++a) {
    if (dims_[a] <= 0) throw VolumeError("volume dims must be positive");
    if (!(spacing_[a] > 0.0) || !std::isfinite(spacing_[a])) throw VolumeError("volume spacing must be positive");
  }
  const std::size_t expected = static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
  if (data_.size() != expected) {
    throw VolumeError("volume data length " + std::to_string(data_.size()) + " does not match dims product " +
                      std::to_string(expected));
  }
  for (float v : data_) {
    if (!(v >= 0.0f && v <= 1.0f)) throw VolumeError("volume scalars must lie in [0,1]");
    max_value_ = std::max(max_value_, v);
  }
  const Vec3 extent = Vec3(dims_[0], dims_[1], dims_[2]).cwiseProduct(spacing_);
  bounds_ = Aabb{-0.5 * extent, 0.5 * extent};
  inv_spacing_ = spacing_.cwiseInverse();
}

double VolumeGrid::sample(const Vec3& p) const {
  if (!bounds_.contains(p)) return 0.0;
  const Vec3 g = (p - bounds_.lo).cwiseProduct(inv_spacing_) - Vec3::Constant(0.5);
  int i0[3];
  int i1[3];
  double f[3];
  for (int a = 0; a < 3; ++a) {
    const double fl = std::floor(g[a]);
    f[a] = g[a] - fl;
    const int i = static_cast<int>(fl);
    i0[a] = std::clamp(i, 0, dims_[a] - 1);
    i1[a] = std::clamp(i + 1, 0, dims_[a] - 1);
  }
  const double c000 = voxel(i0[0], i0[1], i0[2]);
  const double c100 = voxel(i1[0], i0[1], i0[2]);
  const double c010 = voxel(i0[0], i1[1], i0[2]);
  const double c110 = voxel(i1[0], i1[1], i0[2]);
  const double c001 = voxel(i0[0], i0[1], i1[2]);
  const double c101 = voxel(i1[0], i0[1], i1[2]);
  const double c011 = voxel(i0[0], i1[1], i1[2]);
  const double c111 = voxel(i1[0], i1[1], i1[2]);
  const double c00 = c000 + f[0] * (c100 - c000);
  const double c10 = c010 + f[0] * (c110 - c010);
  const double c01 = c001 + f[0] * (c101 - c001);
  const double c11 = c011 + f[0] * (c111 - c011);
  const double c0 = c00 + f[1] * (c10 - c00);
  const double c1 = c01 + f[1] * (c11 - c01);
  return c0 + f[2] * (c1 - c0);
}

VolumeMeta parse_volume_meta(const nlohmann::json& doc) {
  JsonReader r(doc, "");
  VolumeMeta meta;
  r.require_keys({"dims", "bps", "endianness", "spacing"});
  r.allow_only({"dims", "bps", "endianness", "spacing"});
  meta.dims = r.dims("dims");
  meta.bits_per_sample = r.integer("bps");
  const std::string endian = r.string("endianness");
  if (endian == "little") {
    meta.endianness = Endianness::kLittle;
  } else if (endian == "big") {
    meta.endianness = Endianness::kBig;
  } else {
    throw VolumeError("/endianness: expected \"little\" or \"big\", got \"" + endian + "\"");
  }
  meta.spacing = r.vec3("spacing");
  if (meta.bits_per_sample != 8 && meta.bits_per_sample != 16) {
    throw VolumeError("unsupported bits per sample " + std::to_string(meta.bits_per_sample) + " (expected 8 or 16)");
  }
  return meta;
}

VolumeMeta load_volume_meta(const std::filesystem::path& sidecar) {
  return parse_volume_meta(read_json_file(sidecar));
}

nlohmann::json to_json(const VolumeMeta& meta) {
  return {{"dims", meta.dims},
          {"bps", meta.bits_per_sample},
          {"endianness", meta.endianness == Endianness::kLittle ? "little" : "big"},
          {"spacing", {meta.spacing.x(), meta.spacing.y(), meta.spacing.z()}}};
}

VolumeGrid load_raw_volume(const std::filesystem::path& path, const VolumeMeta& meta) {
  if (meta.bits_per_sample != 8 && meta.bits_per_sample != 16) {
    throw VolumeError("unsupported bits per sample " + std::to_string(meta.bits_per_sample) + " (expected 8 or 16)");
  }
  for (int d : meta.dims) {
    if (d <= 0) throw VolumeError("volume dims must be positive");
  }
  const std::uintmax_t bytes_per_sample = static_cast<std::uintmax_t>(meta.bits_per_sample / 8);
  const std::uintmax_t count = static_cast<std::uintmax_t>(meta.dims[0]) * meta.dims[1] * meta.dims[2];
  const std::uintmax_t expected = count * bytes_per_sample;
  std::error_code ec;
  const std::uintmax_t actual = std::filesystem::file_size(path, ec);
  if (ec) throw VolumeError("cannot stat raw volume " + path.string() + ": " + ec.message());
  if (actual != expected) throw SizeMismatchError(expected, actual);

  std::ifstream in(path, std::ios::binary);
  if (!in) throw VolumeError("cannot open raw volume " + path.string());
  std::vector<unsigned char> raw(static_cast<std::size_t>(expected));
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(expected));
  if (static_cast<std::uintmax_t>(in.gcount()) != expected) throw SizeMismatchError(expected, in.gcount());

  std::vector<float> data(static_cast<std::size_t>(count));
  if (meta.bits_per_sample == 8) {
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<float>(raw[i] / 255.0);
  } else {
    const bool little = meta.endianness == Endianness::kLittle;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const unsigned lo = raw[2 * i + (little ? 0 : 1)];
      const unsigned hi = raw[2 * i + (little ? 1 : 0)];
      data[i] = static_cast<float>(static_cast<double>((hi << 8) | lo) / 65535.0);
    }
  }
  return VolumeGrid(meta.dims, meta.spacing, std::move(data));
}

std::string to_string(ProceduralKind kind) {
  switch (kind) {
    case ProceduralKind::kConstant: return "constant";
    case ProceduralKind::kSphere: return "sphere";
    case ProceduralKind::kShell: return "shell";
    case ProceduralKind::kFbmNoise: return "fbm-noise";
  }
  return "unknown";
}

ProceduralKind procedural_kind_from_string(const std::string& name) {
  if (name == "constant") return ProceduralKind::kConstant;
  if (name == "sphere") return ProceduralKind::kSphere;
  if (name == "shell") return ProceduralKind::kShell;
  if (name == "fbm-noise") return ProceduralKind::kFbmNoise;
  throw VolumeError("unknown procedural volume kind \"" + name + "\"");
}

namespace {

double lattice_value(std::uint64_t seed, std::int64_t x, std::int64_t y, std::int64_t z) {
  std::uint64_t k = combine_key(seed, static_cast<std::uint64_t>(x));
  k = combine_key(k, static_cast<std::uint64_t>(y));
  k = combine_key(k, static_cast<std::uint64_t>(z));
  return static_cast<double>(k >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

double quintic(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

double value_noise(std::uint64_t seed, const Vec3& p) {
  const double fx = std::floor(p.x()), fy = std::floor(p.y()), fz = std::floor(p.z());
  const auto ix = static_cast<std::int64_t>(fx), iy = static_cast<std::int64_t>(fy),
             iz = static_cast<std::int64_t>(fz);
  const double u = quintic(p.x() - fx), v = quintic(p.y() - fy), w = quintic(p.z() - fz);
  auto lerp = [](double a, double b, double t) { return a + t * (b - a); };
  const double x00 = lerp(lattice_value(seed, ix, iy, iz), lattice_value(seed, ix + 1, iy, iz), u);
  const double x10 = lerp(lattice_value(seed, ix, iy + 1, iz), lattice_value(seed, ix + 1, iy + 1, iz), u);
  const double x01 = lerp(lattice_value(seed, ix, iy, iz + 1), lattice_value(seed, ix + 1, iy, iz + 1), u);
  const double x11 = lerp(lattice_value(seed, ix, iy + 1, iz + 1), lattice_value(seed, ix + 1, iy + 1, iz + 1), u);
  return lerp(lerp(x00, x10, v), lerp(x01, x11, v), w);
}

void validate_params(ProceduralKind kind, const ProceduralParams& p) {
  for (int a = 0; a < 3; ++a) {
    if (!(p.spacing[a] > 0.0)) throw VolumeError("procedural volume: spacing must be positive");
  }
  switch (kind) {
    case ProceduralKind::kConstant:
      if (!(p.value >= 0.0 && p.value <= 1.0)) throw VolumeError("procedural constant: value must lie in [0,1]");
      break;
    case ProceduralKind::kShell:
      if (!(p.thickness > 0.0 && p.thickness <= p.radius)) {
        throw VolumeError("procedural shell: thickness must lie in (0, radius]");
      }
      [[fallthrough]];
    case ProceduralKind::kSphere:
      if (!(p.radius > 0.0)) throw VolumeError("procedural sphere: radius must be positive");
      break;
    case ProceduralKind::kFbmNoise:
      if (p.octaves < 1 || p.octaves > 16) throw VolumeError("procedural fbm-noise: octaves must lie in [1,16]");
      if (!(p.frequency > 0.0)) throw VolumeError("procedural fbm-noise: frequency must be positive");
      if (!(p.threshold >= 0.0 && p.threshold < 1.0)) {
        throw VolumeError("procedural fbm-noise: threshold must lie in [0,1)");
      }
      break;
  }
}

}  // namespace

VolumeGrid make_procedural_volume(ProceduralKind kind, Dims dims, const ProceduralParams& params) {
  for (int d : dims) {
    if (d <= 0) throw VolumeError("procedural volume: dims must be positive");
  }
  validate_params(kind, params);
  const std::size_t count = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  std::vector<float> data(count, 0.0f);
  const Vec3 extent = Vec3(dims[0], dims[1], dims[2]).cwiseProduct(params.spacing);
  const double min_extent = extent.minCoeff();
  const Vec3 lo = -0.5 * extent;

  for (int z = 0; z < dims[2]; ++z) {
    for (int y = 0; y < dims[1]; ++y) {
      for (int x = 0; x < dims[0]; ++x) {
        const Vec3 c = lo + Vec3(x + 0.5, y + 0.5, z + 0.5).cwiseProduct(params.spacing);
        const double r = c.norm() / min_extent;  // 0 at the center, 0.5 at the nearest face
        double v = 0.0;
        switch (kind) {
          case ProceduralKind::kConstant:
            v = params.value;
            break;
          case ProceduralKind::kSphere:
            v = r <= params.radius ? 1.0 : 0.0;
            break;
          case ProceduralKind::kShell:
            v = (r <= params.radius && r >= params.radius - params.thickness) ? 1.0 : 0.0;
            break;
          case ProceduralKind::kFbmNoise: {
            // Unit-cube coordinates so frequency counts lattice cells per volume.
            const Vec3 u = (c - lo).cwiseQuotient(extent);
            double sum = 0.0, amp = 0.5, norm = 0.0, freq = params.frequency;
            for (int o = 0; o < params.octaves; ++o) {
              sum += amp * value_noise(params.seed + static_cast<std::uint64_t>(o), u * freq);
              norm += amp;
              amp *= 0.5;
              freq *= 2.0;
            }
            double n = 0.5 + 0.5 * sum / norm;
            n = std::clamp((n - params.threshold) / (1.0 - params.threshold), 0.0, 1.0);
            if (params.falloff > 0.0) {
              const double env = std::clamp(1.0 - r / params.falloff, 0.0, 1.0);
              n *= std::min(1.0, 4.0 * env);
            }
            v = n;
            break;
          }
        }
        data[(static_cast<std::size_t>(z) * dims[1] + y) * dims[0] + x] = static_cast<float>(v);
      }
    }
  }
  return VolumeGrid(dims, params.spacing, std::move(data));
}

TransferFunction::TransferFunction(std::vector<ControlPoint> points, double density_scale)
    : points_(std::move(points)), density_scale_(density_scale) {
  validate(points_, density_scale_);
}

void TransferFunction::validate(const std::vector<ControlPoint>& points, double density_scale) {
  if (!(density_scale > 0.0) || !std::isfinite(density_scale)) {
    throw VolumeError("transfer function: density_scale must be positive");
  }
  if (points.size() < 2) throw VolumeError("transfer function: at least two control points required");
  if (points.front().position != 0.0) throw VolumeError("transfer function: first control point must be at 0");
  if (points.back().position != 1.0) throw VolumeError("transfer function: last control point must be at 1");
  for (std::size_t i = 0; i < points.size(); ++i) {
    const ControlPoint& p = points[i];
    if (i > 0 && !(p.position > points[i - 1].position)) {
      throw VolumeError("transfer function: control point positions must be strictly increasing (index " +
                        std::to_string(i) + ")");
    }
    if (!(p.opacity >= 0.0 && p.opacity <= 1.0)) {
      throw VolumeError("transfer function: opacity must lie in [0,1] (index " + std::to_string(i) + ")");
    }
    if (!((p.albedo >= 0.0).all() && (p.albedo <= 1.0).all())) {
      throw VolumeError("transfer function: albedo must lie in [0,1] (index " + std::to_string(i) + ")");
    }
    if (!((p.emission >= 0.0).all() && p.emission.isFinite().all())) {
      throw VolumeError("transfer function: emission must be finite and >= 0 (index " + std::to_string(i) + ")");
    }
  }
}

MediumProperties TransferFunction::evaluate(double scalar) const {
  const double s = std::clamp(scalar, 0.0, 1.0);
  std::size_t hi = 1;
  while (hi + 1 < points_.size() && points_[hi].position < s) ++hi;
  const ControlPoint& a = points_[hi - 1];
  const ControlPoint& b = points_[hi];
  MediumProperties m;
  if (s == a.position) {
    m.mu_t = a.opacity * density_scale_;
    m.albedo = a.albedo;
    m.emission = a.emission;
    return m;
  }
  if (s == b.position) {
    m.mu_t = b.opacity * density_scale_;
    m.albedo = b.albedo;
    m.emission = b.emission;
    return m;
  }
  const double t = (s - a.position) / (b.position - a.position);
  m.mu_t = (a.opacity + t * (b.opacity - a.opacity)) * density_scale_;
  m.albedo = a.albedo + t * (b.albedo - a.albedo);
  m.emission = a.emission + t * (b.emission - a.emission);
  return m;
}

double TransferFunction::extinction(double scalar) const {
  const double s = std::clamp(scalar, 0.0, 1.0);
  std::size_t hi = 1;
  while (hi + 1 < points_.size() && points_[hi].position < s) ++hi;
  const ControlPoint& a = points_[hi - 1];
  const ControlPoint& b = points_[hi];
  if (s == b.position) return b.opacity * density_scale_;
  const double t = (s - a.position) / (b.position - a.position);
  return (a.opacity + t * (b.opacity - a.opacity)) * density_scale_;
}

double TransferFunction::max_opacity(double upper) const {
  const double u = std::clamp(upper, 0.0, 1.0);
  double best = points_.front().opacity;
  for (const ControlPoint& p : points_) {
    if (p.position > u) break;
    best = std::max(best, p.opacity);
  }
  return std::max(best, extinction(u) / density_scale_);
}

double max_extinction(const VolumeGrid& grid, const TransferFunction& tf) {
  return tf.density_scale() * tf.max_opacity(grid.max_value());
}

TransferFunction parse_transfer_function(const nlohmann::json& doc) {
  JsonReader r(doc, "");
  r.allow_only({"density_scale", "points"});
  r.require_keys({"density_scale", "points"});
  const double scale = r.number("density_scale");
  std::vector<ControlPoint> points;
  const auto& arr = r.array("points");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    JsonReader pr(arr[i], "/points/" + std::to_string(i));
    pr.allow_only({"x", "albedo", "opacity", "emission"});
    pr.require_keys({"x", "opacity"});
    ControlPoint cp;
    cp.position = pr.number("x");
    cp.opacity = pr.number("opacity");
    if (pr.has("albedo")) cp.albedo = pr.color("albedo");
    if (pr.has("emission")) cp.emission = pr.color("emission");
    points.push_back(cp);
  }
  try {
    return TransferFunction(std::move(points), scale);
  } catch (const VolumeError& e) {
    throw JsonFieldError(r.path(), e.what());
  }
}

TransferFunction load_transfer_function(const std::filesystem::path& path) {
  return parse_transfer_function(read_json_file(path));
}

nlohmann::json to_json(const TransferFunction& tf) {
  nlohmann::json pts = nlohmann::json::array();
  for (const ControlPoint& p : tf.points()) {
    pts.push_back({{"x", p.position},
                   {"albedo", {p.albedo[0], p.albedo[1], p.albedo[2]}},
                   {"opacity", p.opacity},
                   {"emission", {p.emission[0], p.emission[1], p.emission[2]}}});
  }
  return {{"density_scale", tf.density_scale()}, {"points", std::move(pts)}};
}

}  // namespace vptdn
