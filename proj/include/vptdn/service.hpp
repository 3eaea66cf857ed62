// Copyright 2026 The vptdn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vptdn/denoiser.hpp"
#include "vptdn/scenario.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace vptdn {

// ---- wire protocol --------------------------------------------------------

inline constexpr char kFrameMagic[4] = {'V', 'P', 'T', 'F'};
inline constexpr std::size_t kFrameHeaderBytes = 20;

struct FramePacket {
  std::uint32_t frame_id = 0;
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  float render_ms = 0.0f;
  float denoise_ms = 0.0f;
  std::vector<std::uint8_t> rgba;  // rows top to bottom

  bool operator==(const FramePacket&) const = default;
};

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// "VPTF" | id u32 | width u16 | height u16 | render_ms f32 | denoise_ms f32
/// | RGBA8, all little-endian.
std::vector<std::uint8_t> encode_packet(const FramePacket& packet);

/// Throws ProtocolError on a bad magic or a payload of the wrong length.
FramePacket decode_packet(const std::vector<std::uint8_t>& bytes);

/// Tone-mapped RGBA8 with alpha 255.
std::vector<std::uint8_t> to_rgba8(const ImageRGB& ldr);

struct CameraOrbit {
  double dtheta = 0.0;  // radians around the up axis
  double dphi = 0.0;    // radians of elevation
  double dzoom = 0.0;   // log-distance change; positive moves away
};

struct LightEdit {
  int index = 0;
  std::optional<Vec3> position;
  std::optional<Color> intensity;  // linear RGB
};

struct TransferFunctionEdit {
  std::vector<ControlPoint> points;
  std::optional<double> density_scale;  // keeps the current scale when absent
};

enum class DisplayBuffer { kDenoised, kNoisy, kFeature, kError };

std::string to_string(DisplayBuffer display);

struct SetCommand {
  std::optional<int> spp;
  std::optional<bool> denoiser;
  std::optional<DisplayBuffer> display;
  std::optional<std::pair<int, int>> dims;
};

using ControlMessage = std::variant<CameraOrbit, LightEdit, TransferFunctionEdit, SetCommand>;

class ControlError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kMaxLiveSpp = 1024;
inline constexpr int kMaxLiveDim = 4096;

/// Parses and range-checks one JSON control message.
ControlMessage parse_control(const std::string& text);
nlohmann::json to_json(const ControlMessage& message);

// ---- session --------------------------------------------------------------

struct SessionOptions {
  int width = 320;
  int height = 240;
  int spp = 1;
  bool denoiser = true;
  DisplayBuffer display = DisplayBuffer::kDenoised;
};

/// Orbit pose of the live camera around its target.
struct OrbitPose {
  Vec3 target = Vec3::Zero();
  Vec3 up = Vec3::UnitY();
  double theta = 0.0;  // azimuth
  double phi = 0.0;    // elevation
  double distance = 1.0;
  double fov_deg = 40.0;

  Vec3 position() const;
  static OrbitPose from_camera(const CameraKey& key);
};

/// Everything one frame is rendered from.
struct SessionSnapshot {
  Scenario scene;  // single-keyframe tracks holding the current values
  OrbitPose pose;
  SessionOptions options;
};

struct StepResult {
  FramePacket packet;
  ImageRGB noisy;     // XYZ
  ImageRGB denoised;  // XYZ, empty when the denoiser is off
  CameraKey camera;   // exact camera used for the frame
};

/// One live render -> denoise loop. Control messages queue up and are
/// applied together at the next frame boundary.
class Session {
 public:
  explicit Session(const Scenario& scenario, SessionOptions options = {});

  /// Validates and queues a message; returns the rejection reason instead
  /// of throwing. Thread-safe.
  std::optional<std::string> handle_control(const std::string& text);
  void enqueue(const ControlMessage& message);

  /// Applies queued edits, renders, denoises and tone maps one frame.
  StepResult step();

  std::uint32_t frame_counter() const { return frame_counter_; }
  std::uint64_t denoiser_version() const { return denoiser_.state().version(); }
  const DenoiserState& denoiser_state() const { return denoiser_.state(); }
  const SessionSnapshot& snapshot() const { return current_; }
  std::size_t pending() const;

 private:
  void apply(const ControlMessage& message, SessionSnapshot& next, bool& reset_dims);

  ScenarioAssets assets_;
  SessionSnapshot current_;
  Denoiser denoiser_;
  std::uint32_t frame_counter_ = 0;
  std::optional<Mat4> previous_view_projection_;
  mutable std::mutex queue_mutex_;
  std::vector<ControlMessage> queue_;
};

// ---- server ---------------------------------------------------------------

struct ServeOptions {
  Scenario scenario;
  SessionOptions session;
  std::string address = "127.0.0.1";
  unsigned short port = 8080;  // 0 picks a free port
  std::filesystem::path static_dir;
  /// Frames per session before closing; 0 streams until disconnect.
  std::uint32_t max_frames = 0;
};

/// HTTP static files plus a websocket endpoint at /session.
class Server {
 public:
  explicit Server(ServeOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and starts accepting on a background thread.
  void start();
  void stop();
  /// Blocks until stop() is called from another thread or a signal.
  void wait();
  unsigned short port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Runs a server in the foreground until SIGINT/SIGTERM.
void serve(const ServeOptions& options);

}  // namespace vptdn
