// Copyright 2026 The vptdn Authors
// SPDX-License-Identifier: Apache-2.0

#include "vptdn/scenario.hpp"

#include "vptdn/color.hpp"
#include "vptdn/json_util.hpp"
#include "vptdn/manifest.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace vptdn {
namespace {

nlohmann::json vec_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }
nlohmann::json color_json(const Color& c) { return {c[0], c[1], c[2]}; }

// Re-roots a field error raised by a nested parser.
[[noreturn]] void rethrow_under(const std::string& prefix, const JsonFieldError& e) {
  throw JsonFieldError(prefix + (e.field() == "/" ? "" : e.field()), e.message());
}

VolumeSpec parse_volume_spec(const JsonReader& r) {
  VolumeSpec spec;
  if (r.has("raw")) {
    r.allow_only({"raw", "meta"});
    r.require_keys({"raw", "meta"});
    spec.source = VolumeSpec::Source::kRaw;
    spec.raw = r.string("raw");
    spec.meta = r.string("meta");
    return spec;
  }
  r.allow_only({"kind", "dims", "value", "radius", "thickness", "seed", "octaves", "frequency", "threshold",
                "falloff", "spacing"});
  r.require_keys({"kind", "dims"});
  try {
    spec.kind = procedural_kind_from_string(r.string("kind"));
  } catch (const VolumeError& e) {
    throw JsonFieldError(r.field_path("kind"), e.what());
  }
  spec.dims = r.dims("dims");
  ProceduralParams& p = spec.params;
  p.value = r.number_or("value", p.value);
  p.radius = r.number_or("radius", p.radius);
  p.thickness = r.number_or("thickness", p.thickness);
  if (r.has("seed")) p.seed = r.uint64("seed");
  p.octaves = r.integer_or("octaves", p.octaves);
  p.frequency = r.number_or("frequency", p.frequency);
  p.threshold = r.number_or("threshold", p.threshold);
  p.falloff = r.number_or("falloff", p.falloff);
  if (r.has("spacing")) p.spacing = r.vec3("spacing");
  return spec;
}

nlohmann::json volume_json(const VolumeSpec& spec) {
  if (spec.source == VolumeSpec::Source::kRaw) {
    return {{"raw", spec.raw.generic_string()}, {"meta", spec.meta.generic_string()}};
  }
  const ProceduralParams& p = spec.params;
  return {{"kind", to_string(spec.kind)}, {"dims", spec.dims},         {"value", p.value},
          {"radius", p.radius},           {"thickness", p.thickness}, {"seed", p.seed},
          {"octaves", p.octaves},         {"frequency", p.frequency}, {"threshold", p.threshold},
          {"falloff", p.falloff},         {"spacing", vec_json(p.spacing)}};
}

LightKind light_kind_from_string(const std::string& name, const std::string& field) {
  if (name == "point") return LightKind::kPoint;
  if (name == "area") return LightKind::kArea;
  if (name == "environment") return LightKind::kEnvironment;
  throw JsonFieldError(field, "unknown light type '" + name + "' (expected point, area or environment)");
}

LightTrack parse_light_track(const JsonReader& r) {
  LightTrack track;
  r.require_keys({"type", "keys"});
  track.kind = light_kind_from_string(r.string("type"), r.field_path("type"));
  if (track.kind == LightKind::kEnvironment) {
    r.allow_only({"type", "keys", "map"});
    if (r.has("map")) track.map = r.string("map");
  } else {
    r.allow_only({"type", "keys"});
  }
  const auto& keys = r.array("keys");
  for (std::size_t i = 0; i < keys.size(); ++i) {
    JsonReader k(keys[i], r.field_path("keys") + "/" + std::to_string(i));
    LightKey key;
    switch (track.kind) {
      case LightKind::kPoint:
        k.allow_only({"frame", "position", "intensity"});
        k.require_keys({"frame", "position", "intensity"});
        key.position = k.vec3("position");
        key.power = k.color("intensity");
        break;
      case LightKind::kArea:
        k.allow_only({"frame", "corner", "edge0", "edge1", "radiance"});
        k.require_keys({"frame", "corner", "edge0", "edge1", "radiance"});
        key.corner = k.vec3("corner");
        key.edge0 = k.vec3("edge0");
        key.edge1 = k.vec3("edge1");
        key.power = k.color("radiance");
        break;
      case LightKind::kEnvironment:
        k.allow_only({"frame", "radiance"});
        k.require_keys({"frame", "radiance"});
        key.power = k.color("radiance");
        break;
    }
    key.frame = k.integer("frame");
    track.keys.push_back(key);
  }
  return track;
}

nlohmann::json light_json(const LightTrack& track) {
  nlohmann::json keys = nlohmann::json::array();
  for (const LightKey& k : track.keys) {
    switch (track.kind) {
      case LightKind::kPoint:
        keys.push_back({{"frame", k.frame}, {"position", vec_json(k.position)}, {"intensity", color_json(k.power)}});
        break;
      case LightKind::kArea:
        keys.push_back({{"frame", k.frame},
                        {"corner", vec_json(k.corner)},
                        {"edge0", vec_json(k.edge0)},
                        {"edge1", vec_json(k.edge1)},
                        {"radiance", color_json(k.power)}});
        break;
      case LightKind::kEnvironment:
        keys.push_back({{"frame", k.frame}, {"radiance", color_json(k.power)}});
        break;
    }
  }
  nlohmann::json out = {{"type", to_string(track.kind)}, {"keys", std::move(keys)}};
  if (!track.map.empty()) out["map"] = track.map.generic_string();
  return out;
}

DenoiserParams parse_denoiser(const JsonReader& r) {
  r.allow_only({"lambda", "h", "epsilon", "alpha", "p0", "sigma_s", "sigma_r"});
  DenoiserParams p;
  p.lambda = r.number_or("lambda", p.lambda);
  p.h = r.number_or("h", p.h);
  p.epsilon = r.number_or("epsilon", p.epsilon);
  p.alpha = r.number_or("alpha", p.alpha);
  p.p0 = r.number_or("p0", p.p0);
  p.sigma_s = r.number_or("sigma_s", p.sigma_s);
  p.sigma_r = r.number_or("sigma_r", p.sigma_r);
  return p;
}

nlohmann::json denoiser_json(const DenoiserParams& p) {
  return {{"lambda", p.lambda}, {"h", p.h},           {"epsilon", p.epsilon}, {"alpha", p.alpha},
          {"p0", p.p0},         {"sigma_s", p.sigma_s}, {"sigma_r", p.sigma_r}};
}

template <class Key>
void check_track_frames(const std::vector<Key>& keys, int frames, const std::string& track) {
  if (keys.empty()) throw ScenarioError(track + ": at least one keyframe required");
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const int f = keys[i].frame;
    if (f < 0 || f >= frames) {
      throw ScenarioError(track + "/" + std::to_string(i) + "/frame: keyframe " + std::to_string(f) +
                          " outside [0, " + std::to_string(frames) + ")");
    }
    if (i > 0 && f <= keys[i - 1].frame) {
      throw ScenarioError(track + "/" + std::to_string(i) + "/frame: keyframes must be strictly increasing (" +
                          std::to_string(f) + " after " + std::to_string(keys[i - 1].frame) + ")");
    }
  }
}

// Bracketing keys and blend factor for frame t.
template <class Key>
std::tuple<const Key*, const Key*, double> bracket(const std::vector<Key>& keys, int t) {
  if (t <= keys.front().frame) return {&keys.front(), &keys.front(), 0.0};
  if (t >= keys.back().frame) return {&keys.back(), &keys.back(), 0.0};
  auto hi = std::upper_bound(keys.begin(), keys.end(), t, [](int v, const Key& k) { return v < k.frame; });
  auto lo = std::prev(hi);
  if (lo->frame == t) return {&*lo, &*lo, 0.0};
  const double s = static_cast<double>(t - lo->frame) / static_cast<double>(hi->frame - lo->frame);
  return {&*lo, &*hi, s};
}

template <class T>
T lerp(const T& a, const T& b, double s) {
  if (s == 0.0) return a;
  return a + (b - a) * s;
}

TransferFunction lerp_tf(const TransferFunction& a, const TransferFunction& b, double s) {
  if (s == 0.0) return a;
  std::vector<ControlPoint> pts(a.points().size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const ControlPoint& pa = a.points()[i];
    const ControlPoint& pb = b.points()[i];
    pts[i].position = lerp(pa.position, pb.position, s);
    pts[i].albedo = lerp<Color>(pa.albedo, pb.albedo, s);
    pts[i].opacity = lerp(pa.opacity, pb.opacity, s);
    pts[i].emission = lerp<Color>(pa.emission, pb.emission, s);
  }
  // Endpoints stay exact so validation never sees 1 - 1e-17.
  pts.front().position = 0.0;
  pts.back().position = 1.0;
  return TransferFunction(std::move(pts), lerp(a.density_scale(), b.density_scale(), s));
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

ImageRGB rgb_map_to_xyz(const ImageRGB& rgb, const Color& tint) {
  ImageRGB out(rgb.width(), rgb.height());
  for (std::size_t i = 0; i < rgb.size(); ++i) out[i] = rgb_to_xyz(tint * rgb[i].cast<double>()).cast<float>();
  return out;
}

}  // namespace

std::string to_string(LightKind kind) {
  switch (kind) {
    case LightKind::kPoint:
      return "point";
    case LightKind::kArea:
      return "area";
    case LightKind::kEnvironment:
      return "environment";
  }
  return "point";
}

void Scenario::validate() const {
  auto fail = [](const std::string& msg) { throw ScenarioError(msg); };
  if (frames < 1) fail("/frames: must be >= 1");
  if (width < 1 || width > 65535) fail("/width: must lie in [1, 65535]");
  if (height < 1 || height > 65535) fail("/height: must lie in [1, 65535]");
  if (spp < 1) fail("/spp: must be >= 1");
  if (reference_spp < 1) fail("/reference_spp: must be >= 1");
  if (max_bounces < 1) fail("/max_bounces: must be >= 1");
  if (!(exposure > 0.0) || !std::isfinite(exposure)) fail("/exposure: must be > 0");
  try {
    denoiser.validate();
  } catch (const std::invalid_argument& e) {
    fail(std::string("/denoiser: ") + e.what());
  }

  check_track_frames(camera, frames, "/tracks/camera");
  for (std::size_t i = 0; i < camera.size(); ++i) {
    const CameraKey& k = camera[i];
    const std::string at = "/tracks/camera/" + std::to_string(i);
    if (!(k.fov_deg > 0.0 && k.fov_deg < 180.0)) fail(at + "/fov_deg: must lie in (0, 180)");
    if ((k.position - k.target).norm() == 0.0) fail(at + ": position equals target");
    if (k.up.cross(k.target - k.position).norm() == 0.0) fail(at + "/up: parallel to the view direction");
  }
  for (std::size_t l = 0; l < lights.size(); ++l) {
    const std::string track = "/tracks/lights/" + std::to_string(l) + "/keys";
    check_track_frames(lights[l].keys, frames, track);
    for (std::size_t i = 0; i < lights[l].keys.size(); ++i) {
      const LightKey& k = lights[l].keys[i];
      if (!k.power.isFinite().all() || (k.power < 0.0).any()) {
        fail(track + "/" + std::to_string(i) + ": light color must be finite and >= 0");
      }
      if (lights[l].kind == LightKind::kArea && !(k.edge0.cross(k.edge1).norm() > 1e-12)) {
        fail(track + "/" + std::to_string(i) + ": area light edges are degenerate");
      }
    }
    if (lights[l].kind != LightKind::kEnvironment && !lights[l].map.empty()) {
      fail("/tracks/lights/" + std::to_string(l) + "/map: only environment lights take a map");
    }
  }
  check_track_frames(transfer_function, frames, "/tracks/transfer_function");
  const std::size_t n = transfer_function.front().tf.points().size();
  for (std::size_t i = 1; i < transfer_function.size(); ++i) {
    if (transfer_function[i].tf.points().size() != n) {
      fail("/tracks/transfer_function/" + std::to_string(i) +
           "/points: every keyframe needs the same number of control points (" + std::to_string(n) + ")");
    }
  }
  if (volume.source == VolumeSpec::Source::kProcedural) {
    for (int d : volume.dims) {
      if (d < 1) fail("/volume/dims: must be positive");
    }
  } else if (volume.raw.empty() || volume.meta.empty()) {
    fail("/volume: raw volumes need both 'raw' and 'meta'");
  }
}

bool Scenario::operator==(const Scenario& o) const {
  return name == o.name && volume == o.volume && frames == o.frames && width == o.width && height == o.height &&
         spp == o.spp && seed == o.seed && reference_spp == o.reference_spp && max_bounces == o.max_bounces &&
         exposure == o.exposure && camera == o.camera && lights == o.lights &&
         transfer_function == o.transfer_function && denoiser == o.denoiser;
}

Scenario parse_scenario(const std::string& text, const std::filesystem::path& base_dir) {
  const nlohmann::json doc = parse_json_text(text);
  JsonReader r(doc, "");
  r.allow_only({"name", "volume", "frames", "width", "height", "spp", "seed", "reference_spp", "max_bounces",
                "exposure", "tracks", "denoiser"});
  r.require_keys({"volume", "frames", "width", "height", "spp", "seed", "tracks"});

  Scenario s;
  s.base_dir = base_dir;
  if (r.has("name")) s.name = r.string("name");
  s.volume = parse_volume_spec(r.object("volume"));
  s.frames = r.integer("frames");
  s.width = r.integer("width");
  s.height = r.integer("height");
  s.spp = r.integer("spp");
  s.seed = r.uint64("seed");
  s.reference_spp = r.integer_or("reference_spp", s.reference_spp);
  s.max_bounces = r.integer_or("max_bounces", s.max_bounces);
  s.exposure = r.number_or("exposure", s.exposure);
  if (r.has("denoiser")) s.denoiser = parse_denoiser(r.object("denoiser"));

  const JsonReader tracks = r.object("tracks");
  tracks.allow_only({"camera", "lights", "transfer_function"});
  tracks.require_keys({"camera", "transfer_function"});
  const auto& cams = tracks.array("camera");
  for (std::size_t i = 0; i < cams.size(); ++i) {
    JsonReader k(cams[i], "/tracks/camera/" + std::to_string(i));
    k.allow_only({"frame", "position", "target", "up", "fov_deg"});
    k.require_keys({"frame", "position", "target"});
    CameraKey key;
    key.frame = k.integer("frame");
    key.position = k.vec3("position");
    key.target = k.vec3("target");
    if (k.has("up")) key.up = k.vec3("up");
    key.fov_deg = k.number_or("fov_deg", key.fov_deg);
    s.camera.push_back(key);
  }
  if (tracks.has("lights")) {
    const auto& lights = tracks.array("lights");
    for (std::size_t i = 0; i < lights.size(); ++i) {
      s.lights.push_back(parse_light_track(JsonReader(lights[i], "/tracks/lights/" + std::to_string(i))));
    }
  }
  const auto& tfs = tracks.array("transfer_function");
  for (std::size_t i = 0; i < tfs.size(); ++i) {
    const std::string at = "/tracks/transfer_function/" + std::to_string(i);
    JsonReader k(tfs[i], at);
    k.allow_only({"frame", "density_scale", "points"});
    k.require_keys({"frame", "density_scale", "points"});
    TransferFunctionKey key;
    key.frame = k.integer("frame");
    nlohmann::json tf_doc = tfs[i];
    tf_doc.erase("frame");
    try {
      key.tf = parse_transfer_function(tf_doc);
    } catch (const JsonFieldError& e) {
      rethrow_under(at, e);
    }
    s.transfer_function.push_back(std::move(key));
  }
  s.validate();
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  Scenario s;
  try {
    s = parse_scenario(ss.str(), path.parent_path());
  } catch (const std::runtime_error& e) {
    throw ScenarioError(path.string() + ": " + e.what());
  }
  if (!nlohmann::json::parse(ss.str()).contains("name")) s.name = path.stem().string();
  return s;
}

nlohmann::json to_json(const Scenario& s) {
  nlohmann::json cams = nlohmann::json::array();
  for (const CameraKey& k : s.camera) {
    cams.push_back({{"frame", k.frame},
                    {"position", vec_json(k.position)},
                    {"target", vec_json(k.target)},
                    {"up", vec_json(k.up)},
                    {"fov_deg", k.fov_deg}});
  }
  nlohmann::json lights = nlohmann::json::array();
  for (const LightTrack& t : s.lights) lights.push_back(light_json(t));
  nlohmann::json tfs = nlohmann::json::array();
  for (const TransferFunctionKey& k : s.transfer_function) {
    nlohmann::json j = to_json(k.tf);
    j["frame"] = k.frame;
    tfs.push_back(std::move(j));
  }
  return {{"name", s.name},
          {"volume", volume_json(s.volume)},
          {"frames", s.frames},
          {"width", s.width},
          {"height", s.height},
          {"spp", s.spp},
          {"seed", s.seed},
          {"reference_spp", s.reference_spp},
          {"max_bounces", s.max_bounces},
          {"exposure", s.exposure},
          {"denoiser", denoiser_json(s.denoiser)},
          {"tracks", {{"camera", std::move(cams)}, {"lights", std::move(lights)}, {"transfer_function", std::move(tfs)}}}};
}

std::string serialize_scenario(const Scenario& s) { return to_json(s).dump(2) + "\n"; }

std::uint64_t reference_key(const Scenario& s) {
  nlohmann::json j = to_json(s);
  j.erase("name");
  j.erase("spp");
  j.erase("denoiser");
  j["renderer_version"] = kRendererVersion;
  return fnv1a(j.dump());
}

std::shared_ptr<const VolumeGrid> load_volume(const VolumeSpec& spec, const std::filesystem::path& base_dir) {
  if (spec.source == VolumeSpec::Source::kProcedural) {
    return std::make_shared<const VolumeGrid>(make_procedural_volume(spec.kind, spec.dims, spec.params));
  }
  auto resolve = [&](const std::filesystem::path& p) { return p.is_absolute() ? p : base_dir / p; };
  const VolumeMeta meta = load_volume_meta(resolve(spec.meta));
  return std::make_shared<const VolumeGrid>(load_raw_volume(resolve(spec.raw), meta));
}

ScenarioAssets load_assets(const Scenario& s) {
  ScenarioAssets a;
  a.volume = load_volume(s.volume, s.base_dir);
  for (const LightTrack& t : s.lights) {
    if (t.map.empty()) {
      a.environment_maps.push_back(nullptr);
    } else {
      const auto path = t.map.is_absolute() ? t.map : s.base_dir / t.map;
      a.environment_maps.push_back(std::make_shared<const ImageRGB>(read_pfm_rgb(path)));
    }
  }
  return a;
}

Camera camera_at_frame(const Scenario& s, int t) {
  const auto [c0, c1, sc] = bracket(s.camera, t);
  const Vec3 pos = lerp<Vec3>(c0->position, c1->position, sc);
  const Vec3 target = lerp<Vec3>(c0->target, c1->target, sc);
  const Vec3 up = lerp<Vec3>(c0->up, c1->up, sc);
  const double fov = lerp(c0->fov_deg, c1->fov_deg, sc);
  return Camera::look_at(pos, target, up, fov * kPi / 180.0, s.width, s.height);
}

FrameScene scene_at_frame(const Scenario& s, int t, const ScenarioAssets& assets) {
  FrameScene out;
  out.scene.volume = assets.volume;
  out.scene.max_bounces = s.max_bounces;

  out.camera = camera_at_frame(s, t);

  for (std::size_t l = 0; l < s.lights.size(); ++l) {
    const LightTrack& track = s.lights[l];
    const auto [k0, k1, sl] = bracket(track.keys, t);
    const Color power = lerp<Color>(k0->power, k1->power, sl);
    switch (track.kind) {
      case LightKind::kPoint:
        out.scene.lights.points.push_back({lerp<Vec3>(k0->position, k1->position, sl), rgb_to_xyz(power)});
        break;
      case LightKind::kArea:
        out.scene.lights.areas.push_back({lerp<Vec3>(k0->corner, k1->corner, sl),
                                          lerp<Vec3>(k0->edge0, k1->edge0, sl),
                                          lerp<Vec3>(k0->edge1, k1->edge1, sl), rgb_to_xyz(power)});
        break;
      case LightKind::kEnvironment: {
        Environment& env = out.scene.lights.environment;
        const auto& map = l < assets.environment_maps.size() ? assets.environment_maps[l] : nullptr;
        if (map) {
          env.map = std::make_shared<const ImageRGB>(rgb_map_to_xyz(*map, power));
          env.radiance = Color::Ones();
        } else {
          env.radiance += rgb_to_xyz(power);
        }
        break;
      }
    }
  }
  out.scene.lights.validate();

  const auto [t0, t1, st] = bracket(s.transfer_function, t);
  out.scene.tf = lerp_tf(t0->tf, t1->tf, st);
  return out;
}

std::string to_string(RunMode mode) {
  switch (mode) {
    case RunMode::kNoisy:
      return "noisy";
    case RunMode::kDenoised:
      return "denoised";
    case RunMode::kReference:
      return "reference";
  }
  return "noisy";
}

RunMode run_mode_from_string(const std::string& name) {
  if (name == "noisy") return RunMode::kNoisy;
  if (name == "denoised") return RunMode::kDenoised;
  if (name == "reference") return RunMode::kReference;
  throw std::invalid_argument("unknown run mode '" + name + "'");
}

std::filesystem::path frame_path(const std::filesystem::path& dir, int frame, const std::string& suffix) {
  char name[64];
  std::snprintf(name, sizeof(name), "frame_%04d%s", frame, suffix.c_str());
  return dir / name;
}

std::filesystem::path mode_dir(const RunOptions& options, const Scenario& s, RunMode mode) {
  if (mode == RunMode::kReference) return reference_dir(options, s);
  return options.out_root / s.name / to_string(mode);
}

std::filesystem::path reference_dir(const RunOptions& options, const Scenario& s) {
  if (!options.reference_dir.empty()) return options.reference_dir;
  return options.out_root / s.name / "reference";
}

std::optional<std::vector<ImageRGB>> load_reference(const std::filesystem::path& dir, const Scenario& s) {
  const auto manifest_path = dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path)) return std::nullopt;
  nlohmann::json m;
  try {
    m = read_json_file(manifest_path);
  } catch (const std::exception&) {
    return std::nullopt;
  }
  if (m.value("mode", "") != "reference" || m.value("reference_key", "") != hash_hex(reference_key(s))) {
    return std::nullopt;
  }
  std::vector<ImageRGB> frames;
  for (int t = 0; t < s.frames; ++t) {
    const auto p = frame_path(dir, t, ".pfm");
    if (!std::filesystem::exists(p)) return std::nullopt;
    frames.push_back(read_pfm_rgb(p));
    if (!frames.back().same_dims(s.width, s.height)) return std::nullopt;
  }
  return frames;
}

namespace {

void write_noisy_outputs(const std::filesystem::path& dir, int t, const FrameEstimate& f) {
  write_pfm(frame_path(dir, t, ".pfm"), f.radiance);
  write_pfm(frame_path(dir, t, "_pos.pfm"), f.first_collision);
  write_pgm(frame_path(dir, t, "_mask.pgm"), f.collision_valid);
}

void finish_run(const Scenario& s, RunMode mode, const RunOptions& options, RunResult& r) {
  if (mode == RunMode::kDenoised) {
    const auto ref_dir = reference_dir(options, s);
    auto reference = load_reference(ref_dir, s);
    if (!reference && options.require_reference) {
      throw ScenarioError("no matching reference sequence at " + ref_dir.string());
    }
    if (reference) {
      r.report = evaluate_sequences(r.inputs, r.frames, *reference, s.exposure);
      if (options.write_outputs) r.report->write_csv(r.output_dir / "report.csv");
    }
  }
  if (options.write_outputs) {
    emit_run_manifest(r.output_dir / "manifest.json", make_run_manifest(to_string(mode), s, r));
  }
}

}  // namespace

RunResult run_scenario(const Scenario& s, RunMode mode, const RunOptions& options) {
  s.validate();
  RunResult r;
  r.mode = mode;
  r.output_dir = mode_dir(options, s, mode);

  if (mode == RunMode::kReference && options.reuse_reference) {
    if (auto cached = load_reference(r.output_dir, s)) {
      r.frames = std::move(*cached);
      r.reused_reference = true;
      for (int t = 0; t < s.frames; ++t) {
        r.hashes.push_back(hash_image(r.frames[static_cast<std::size_t>(t)]));
        r.frame_seeds.push_back(frame_seed(s.seed, static_cast<std::uint64_t>(t)));
      }
      return r;
    }
  }
  if (options.write_outputs) std::filesystem::create_directories(r.output_dir);

  const ScenarioAssets assets = load_assets(s);
  const int spp = mode == RunMode::kReference ? s.reference_spp : s.spp;
  Denoiser denoiser(s.denoiser);
  Mat4 vp_prev = Mat4::Zero();

  for (int t = 0; t < s.frames; ++t) {
    const std::uint64_t seed = frame_seed(s.seed, static_cast<std::uint64_t>(t));
    FrameScene fs;
    FrameEstimate est;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      fs = scene_at_frame(s, t, assets);
      est = render_frame(fs.scene, fs.camera, spp, seed, static_cast<std::uint32_t>(t));
    } catch (const std::exception& e) {
      throw ScenarioError("frame " + std::to_string(t) + ": " + e.what());
    }
    r.render_ms.push_back(ms_since(t0));
    r.discarded_samples += est.discarded_samples;
    r.frame_seeds.push_back(seed);

    if (mode == RunMode::kDenoised) {
      const Mat4 vp = fs.camera.view_projection();
      const auto t1 = std::chrono::steady_clock::now();
      const MotionField motion = t == 0 ? MotionField::zero(s.width, s.height) : compute_motion_field(est, vp_prev, vp);
      DenoiseResult dn = denoiser.process(est.radiance, motion);
      r.denoise_ms.push_back(ms_since(t1));
      r.reset_pixels += dn.stats.reset_pixels;
      r.nonfinite_resets += dn.stats.nonfinite_resets;
      vp_prev = vp;
      if (options.write_outputs) write_pfm(frame_path(r.output_dir, t, ".pfm"), dn.image);
      r.hashes.push_back(hash_image(dn.image));
      r.inputs.push_back(std::move(est.radiance));
      r.frames.push_back(std::move(dn.image));
    } else {
      if (options.write_outputs) write_noisy_outputs(r.output_dir, t, est);
      r.hashes.push_back(hash_image(est.radiance));
      r.frames.push_back(std::move(est.radiance));
    }
    if (options.progress) options.progress(t, s.frames);
  }
  finish_run(s, mode, options, r);
  return r;
}

RunResult replay_denoiser(const Scenario& s, const std::filesystem::path& noisy_dir, const RunOptions& options) {
  s.validate();
  RunResult r;
  r.mode = RunMode::kDenoised;
  r.output_dir = mode_dir(options, s, RunMode::kDenoised);
  if (options.write_outputs) std::filesystem::create_directories(r.output_dir);

  Denoiser denoiser(s.denoiser);
  Mat4 vp_prev = Mat4::Zero();
  for (int t = 0; t < s.frames; ++t) {
    FrameEstimate est;
    try {
      est.radiance = read_pfm_rgb(frame_path(noisy_dir, t, ".pfm"));
      est.first_collision = read_pfm_rgb(frame_path(noisy_dir, t, "_pos.pfm"));
      est.collision_valid = read_pgm(frame_path(noisy_dir, t, "_mask.pgm"));
    } catch (const std::exception& e) {
      throw ScenarioError("frame " + std::to_string(t) + ": " + e.what());
    }
    if (!est.radiance.same_dims(s.width, s.height) || !est.first_collision.same_dims(est.radiance) ||
        !est.collision_valid.same_dims(est.radiance)) {
      throw ScenarioError("frame " + std::to_string(t) + ": stored buffers do not match the scenario dims");
    }
    est.frame = static_cast<std::uint32_t>(t);
    est.seed = frame_seed(s.seed, static_cast<std::uint64_t>(t));
    r.frame_seeds.push_back(est.seed);
    r.render_ms.push_back(0.0);

    const Mat4 vp = camera_at_frame(s, t).view_projection();
    const auto t1 = std::chrono::steady_clock::now();
    const MotionField motion = t == 0 ? MotionField::zero(s.width, s.height) : compute_motion_field(est, vp_prev, vp);
    DenoiseResult dn = denoiser.process(est.radiance, motion);
    r.denoise_ms.push_back(ms_since(t1));
    r.reset_pixels += dn.stats.reset_pixels;
    r.nonfinite_resets += dn.stats.nonfinite_resets;
    vp_prev = vp;
    if (options.write_outputs) write_pfm(frame_path(r.output_dir, t, ".pfm"), dn.image);
    r.hashes.push_back(hash_image(dn.image));
    r.inputs.push_back(std::move(est.radiance));
    r.frames.push_back(std::move(dn.image));
    if (options.progress) options.progress(t, s.frames);
  }
  finish_run(s, RunMode::kDenoised, options, r);
  return r;
}

}  // namespace vptdn
