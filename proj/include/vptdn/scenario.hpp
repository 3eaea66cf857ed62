// Copyright 2026 The vptdn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vptdn/camera.hpp"
#include "vptdn/denoiser.hpp"
#include "vptdn/metrics.hpp"
#include "vptdn/renderer.hpp"
#include "vptdn/volume.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace vptdn {

struct VolumeSpec {
  enum class Source { kProcedural, kRaw };
  Source source = Source::kProcedural;
  ProceduralKind kind = ProceduralKind::kSphere;
  Dims dims{32, 32, 32};
  ProceduralParams params;
  std::filesystem::path raw;   // relative paths resolve against the scenario file
  std::filesystem::path meta;

  bool operator==(const VolumeSpec&) const = default;
};

struct CameraKey {
  int frame = 0;
  Vec3 position = Vec3(0, 0, 3);
  Vec3 target = Vec3::Zero();
  Vec3 up = Vec3::UnitY();
  double fov_deg = 40.0;

  bool operator==(const CameraKey&) const = default;
};

enum class LightKind { kPoint, kArea, kEnvironment };

std::string to_string(LightKind kind);

/// One keyframe of one light. Colors are linear RGB; `power` is intensity
/// for point lights and radiance for area lights and the environment.
struct LightKey {
  int frame = 0;
  Vec3 position = Vec3::Zero();  // point
  Vec3 corner = Vec3::Zero();    // area
  Vec3 edge0 = Vec3::UnitX();
  Vec3 edge1 = Vec3::UnitY();
  Color power = Color::Zero();

  bool operator==(const LightKey& o) const {
    return frame == o.frame && position == o.position && corner == o.corner && edge0 == o.edge0 &&
           edge1 == o.edge1 && (power == o.power).all();
  }
};

struct LightTrack {
  LightKind kind = LightKind::kPoint;
  std::vector<LightKey> keys;
  std::filesystem::path map;  // environment only, equirectangular PFM

  bool operator==(const LightTrack&) const = default;
};

struct TransferFunctionKey {
  int frame = 0;
  TransferFunction tf;

  bool operator==(const TransferFunctionKey&) const = default;
};

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Scenario {
  std::string name = "scenario";
  VolumeSpec volume;
  int frames = 1;
  int width = 64;
  int height = 64;
  int spp = 2;
  std::uint64_t seed = 1;
  int reference_spp = 1024;
  int max_bounces = 4;
  double exposure = 1.0;
  std::vector<CameraKey> camera;
  std::vector<LightTrack> lights;
  std::vector<TransferFunctionKey> transfer_function;
  DenoiserParams denoiser;
  std::filesystem::path base_dir;  // not serialized

  /// Throws ScenarioError naming the offending field.
  void validate() const;
  bool operator==(const Scenario& o) const;
};

/// Parses a scenario document. Errors carry the JSON pointer of the field
/// (and line/column for syntax errors).
Scenario parse_scenario(const std::string& text, const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);
nlohmann::json to_json(const Scenario& scenario);
std::string serialize_scenario(const Scenario& scenario);

/// Hash of everything that determines reference images (excludes spp,
/// denoiser settings and name).
std::uint64_t reference_key(const Scenario& scenario);

std::shared_ptr<const VolumeGrid> load_volume(const VolumeSpec& spec, const std::filesystem::path& base_dir);

/// File-backed inputs loaded once per run.
struct ScenarioAssets {
  std::shared_ptr<const VolumeGrid> volume;
  std::vector<std::shared_ptr<const ImageRGB>> environment_maps;  // per light track, RGB
};

ScenarioAssets load_assets(const Scenario& scenario);

struct FrameScene {
  Scene scene;
  Camera camera;
};

Camera camera_at_frame(const Scenario& scenario, int t);

/// Linear interpolation of every track at frame t; light colors are
/// converted from linear RGB to the XYZ working space.
FrameScene scene_at_frame(const Scenario& scenario, int t, const ScenarioAssets& assets);

enum class RunMode { kNoisy, kDenoised, kReference };

std::string to_string(RunMode mode);
RunMode run_mode_from_string(const std::string& name);

struct RunOptions {
  std::filesystem::path out_root = "out";
  bool write_outputs = true;
  /// Reference directory; empty means out_root/<name>/reference.
  std::filesystem::path reference_dir;
  /// Fail when no matching reference exists (denoised mode).
  bool require_reference = false;
  /// Reference mode: reuse frames on disk whose manifest matches.
  bool reuse_reference = true;
  std::function<void(int frame, int frames)> progress;
};

struct RunResult {
  RunMode mode = RunMode::kNoisy;
  std::vector<ImageRGB> frames;  // the mode's output sequence
  std::vector<ImageRGB> inputs;  // noisy inputs (denoised mode only)
  std::vector<std::uint64_t> hashes;
  std::vector<std::uint64_t> frame_seeds;
  std::vector<double> render_ms;
  std::vector<double> denoise_ms;
  std::uint64_t discarded_samples = 0;
  std::uint64_t reset_pixels = 0;
  std::uint64_t nonfinite_resets = 0;
  bool reused_reference = false;
  std::optional<MetricReport> report;
  std::filesystem::path output_dir;
};

std::filesystem::path frame_path(const std::filesystem::path& dir, int frame, const std::string& suffix = "");
std::filesystem::path mode_dir(const RunOptions& options, const Scenario& scenario, RunMode mode);
std::filesystem::path reference_dir(const RunOptions& options, const Scenario& scenario);

/// Loads a reference sequence whose manifest matches the scenario, if any.
std::optional<std::vector<ImageRGB>> load_reference(const std::filesystem::path& dir, const Scenario& scenario);

RunResult run_scenario(const Scenario& scenario, RunMode mode, const RunOptions& options = {});

/// Offline denoising from stored noisy frames and first-collision buffers.
RunResult replay_denoiser(const Scenario& scenario, const std::filesystem::path& noisy_dir,
                          const RunOptions& options = {});

/// camera-orbit, light-orbit, tf-edit, static-flicker, spp-sweep.
std::vector<Scenario> builtin_scenarios();
std::optional<Scenario> builtin_scenario(const std::string& name);

/// spp values of the convergence sweep.
inline constexpr int kSweepSpp[] = {1, 2, 4, 8, 16};

}  // namespace vptdn
