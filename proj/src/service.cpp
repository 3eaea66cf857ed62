// Copyright 2026 The vptdn Authors
// SPDX-License-Identifier: Apache-2.0

#include "vptdn/service.hpp"

#include "vptdn/json_util.hpp"
#include "vptdn/metrics.hpp"
#include "vptdn/rng.hpp"

#include <boost/asio/signal_set.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <thread>

namespace vptdn {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_f32(std::vector<std::uint8_t>& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::uint16_t get_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}

float get_f32(const std::uint8_t* p) {
  const std::uint32_t bits = get_u32(p);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

double finite_number(const JsonReader& r, const std::string& key, double fallback) {
  const double v = r.number_or(key, fallback);
  if (!std::isfinite(v)) throw JsonFieldError(r.field_path(key), "must be finite");
  return v;
}

Vec3 finite_vec3(const JsonReader& r, const std::string& key) {
  const Vec3 v = r.vec3(key);
  if (!v.allFinite()) throw JsonFieldError(r.field_path(key), "must be finite");
  return v;
}

DisplayBuffer display_from_string(const std::string& name, const std::string& field) {
  if (name == "denoised") return DisplayBuffer::kDenoised;
  if (name == "noisy") return DisplayBuffer::kNoisy;
  if (name == "feature") return DisplayBuffer::kFeature;
  if (name == "error") return DisplayBuffer::kError;
  throw JsonFieldError(field, "unknown display buffer '" + name + "'");
}

ControlMessage parse_control_doc(const nlohmann::json& doc) {
  if (!doc.is_object()) throw JsonFieldError("", "expected an object");
  const JsonReader r(doc, "");
  r.require_keys({"type"});
  const std::string type = r.string("type");

  if (type == "camera-orbit") {
    r.allow_only({"type", "dtheta", "dphi", "dzoom"});
    CameraOrbit m;
    m.dtheta = finite_number(r, "dtheta", 0.0);
    m.dphi = finite_number(r, "dphi", 0.0);
    m.dzoom = finite_number(r, "dzoom", 0.0);
    if (std::abs(m.dzoom) > 4.0) throw JsonFieldError(r.field_path("dzoom"), "must be within [-4, 4]");
    return m;
  }
  if (type == "light-edit") {
    r.allow_only({"type", "index", "position", "intensity"});
    r.require_keys({"index"});
    LightEdit m;
    m.index = r.integer("index");
    if (m.index < 0) throw JsonFieldError(r.field_path("index"), "must be >= 0");
    if (r.has("position")) m.position = finite_vec3(r, "position");
    if (r.has("intensity")) {
      const Color c = r.color("intensity");
      if (!c.allFinite() || (c < 0.0).any()) {
        throw JsonFieldError(r.field_path("intensity"), "must be finite and >= 0");
      }
      m.intensity = c;
    }
    if (!m.position && !m.intensity) throw JsonFieldError("", "expected position or intensity");
    return m;
  }
  if (type == "tf-edit") {
    r.allow_only({"type", "points", "density_scale"});
    r.require_keys({"points"});
    nlohmann::json tf_doc = doc;
    tf_doc.erase("type");
    const bool has_scale = tf_doc.contains("density_scale");
    if (!has_scale) tf_doc["density_scale"] = 1.0;
    const TransferFunction tf = parse_transfer_function(tf_doc);
    TransferFunctionEdit m;
    m.points = tf.points();
    if (has_scale) m.density_scale = tf.density_scale();
    return m;
  }
  if (type == "set") {
    r.allow_only({"type", "spp", "denoiser", "display", "dims"});
    SetCommand m;
    if (r.has("spp")) {
      const int spp = r.integer("spp");
      if (spp < 1 || spp > kMaxLiveSpp) {
        throw JsonFieldError(r.field_path("spp"), "must be within [1, " + std::to_string(kMaxLiveSpp) + "]");
      }
      m.spp = spp;
    }
    if (r.has("denoiser")) m.denoiser = r.boolean("denoiser");
    if (r.has("display")) m.display = display_from_string(r.string("display"), r.field_path("display"));
    if (r.has("dims")) {
      const nlohmann::json& d = r.array("dims");
      if (d.size() != 2 || !d[0].is_number_integer() || !d[1].is_number_integer()) {
        throw JsonFieldError(r.field_path("dims"), "expected [width, height]");
      }
      const int w = d[0].get<int>();
      const int h = d[1].get<int>();
      if (w < 1 || h < 1 || w > kMaxLiveDim || h > kMaxLiveDim) {
        throw JsonFieldError(r.field_path("dims"), "must be within [1, " + std::to_string(kMaxLiveDim) + "]");
      }
      m.dims = std::pair{w, h};
    }
    if (!m.spp && !m.denoiser && !m.display && !m.dims) throw JsonFieldError("", "empty set command");
    return m;
  }
  throw JsonFieldError("/type", "unknown message type '" + type + "'");
}

nlohmann::json error_reply(const std::string& reason) { return {{"type", "error"}, {"reason", reason}}; }

}  // namespace

std::vector<std::uint8_t> encode_packet(const FramePacket& packet) {
  const std::size_t expected = static_cast<std::size_t>(packet.width) * packet.height * 4;
  if (packet.rgba.size() != expected) throw ProtocolError("rgba payload does not match width * height * 4");
  std::vector<std::uint8_t> out;
  out.reserve(kFrameHeaderBytes + expected);
  out.insert(out.end(), std::begin(kFrameMagic), std::end(kFrameMagic));
  put_u32(out, packet.frame_id);
  put_u16(out, packet.width);
  put_u16(out, packet.height);
  put_f32(out, packet.render_ms);
  put_f32(out, packet.denoise_ms);
  out.insert(out.end(), packet.rgba.begin(), packet.rgba.end());
  return out;
}

FramePacket decode_packet(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kFrameHeaderBytes) throw ProtocolError("packet shorter than header");
  if (!std::equal(std::begin(kFrameMagic), std::end(kFrameMagic), bytes.begin())) {
    throw ProtocolError("bad packet magic");
  }
  FramePacket p;
  const std::uint8_t* b = bytes.data();
  p.frame_id = get_u32(b + 4);
  p.width = get_u16(b + 8);
  p.height = get_u16(b + 10);
  p.render_ms = get_f32(b + 12);
  p.denoise_ms = get_f32(b + 16);
  const std::size_t expected = static_cast<std::size_t>(p.width) * p.height * 4;
  if (bytes.size() - kFrameHeaderBytes != expected) {
    throw ProtocolError("payload is " + std::to_string(bytes.size() - kFrameHeaderBytes) + " bytes, expected " +
                        std::to_string(expected));
  }
  p.rgba.assign(bytes.begin() + kFrameHeaderBytes, bytes.end());
  return p;
}

std::vector<std::uint8_t> to_rgba8(const ImageRGB& ldr) {
  std::vector<std::uint8_t> out;
  out.reserve(ldr.size() * 4);
  for (const Colorf& c : ldr.pixels()) {
    for (int k = 0; k < 3; ++k) {
      const float v = std::clamp(c[k], 0.0f, 1.0f);
      out.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0f)));
    }
    out.push_back(255);
  }
  return out;
}

std::string to_string(DisplayBuffer display) {
  switch (display) {
    case DisplayBuffer::kDenoised:
      return "denoised";
    case DisplayBuffer::kNoisy:
      return "noisy";
    case DisplayBuffer::kFeature:
      return "feature";
    case DisplayBuffer::kError:
      return "error";
  }
  return "denoised";
}

ControlMessage parse_control(const std::string& text) {
  try {
    return parse_control_doc(parse_json_text(text));
  } catch (const JsonFieldError& e) {
    throw ControlError(e.what());
  } catch (const std::exception& e) {
    throw ControlError(e.what());
  }
}

nlohmann::json to_json(const ControlMessage& message) {
  return std::visit(
      [](const auto& m) -> nlohmann::json {
        using T = std::decay_t<decltype(m)>;
        nlohmann::json j;
        if constexpr (std::is_same_v<T, CameraOrbit>) {
          j = {{"type", "camera-orbit"}, {"dtheta", m.dtheta}, {"dphi", m.dphi}, {"dzoom", m.dzoom}};
        } else if constexpr (std::is_same_v<T, LightEdit>) {
          j = {{"type", "light-edit"}, {"index", m.index}};
          if (m.position) j["position"] = {(*m.position)[0], (*m.position)[1], (*m.position)[2]};
          if (m.intensity) j["intensity"] = {(*m.intensity)[0], (*m.intensity)[1], (*m.intensity)[2]};
        } else if constexpr (std::is_same_v<T, TransferFunctionEdit>) {
          j = to_json(TransferFunction(m.points, m.density_scale.value_or(1.0)));
          if (!m.density_scale) j.erase("density_scale");
          j["type"] = "tf-edit";
        } else {
          j = {{"type", "set"}};
          if (m.spp) j["spp"] = *m.spp;
          if (m.denoiser) j["denoiser"] = *m.denoiser;
          if (m.display) j["display"] = to_string(*m.display);
          if (m.dims) j["dims"] = {m.dims->first, m.dims->second};
        }
        return j;
      },
      message);
}

// ---- session --------------------------------------------------------------

Vec3 OrbitPose::position() const {
  const double c = std::cos(phi);
  return target + distance * Vec3(c * std::sin(theta), std::sin(phi), c * std::cos(theta));
}

OrbitPose OrbitPose::from_camera(const CameraKey& key) {
  OrbitPose pose;
  pose.target = key.target;
  pose.up = key.up;
  pose.fov_deg = key.fov_deg;
  const Vec3 offset = key.position - key.target;
  pose.distance = std::max(offset.norm(), 1e-6);
  pose.theta = std::atan2(offset[0], offset[2]);
  pose.phi = std::asin(std::clamp(offset[1] / pose.distance, -1.0, 1.0));
  return pose;
}

namespace {

// Keeps the camera off the poles, where look_at with a +Y up degenerates.
constexpr double kMaxElevation = 89.0 * std::numbers::pi / 180.0;

Scenario live_scene(const Scenario& s, const SessionOptions& options) {
  s.validate();
  Scenario live = s;
  live.frames = 1;
  live.width = options.width;
  live.height = options.height;
  live.spp = options.spp;
  // Frame 0 of every track is its first key.
  live.camera = {s.camera.front()};
  live.camera.front().frame = 0;
  for (LightTrack& track : live.lights) {
    track.keys = {track.keys.front()};
    track.keys.front().frame = 0;
  }
  live.transfer_function = {s.transfer_function.front()};
  live.transfer_function.front().frame = 0;
  return live;
}

}  // namespace

Session::Session(const Scenario& scenario, SessionOptions options)
    : assets_(load_assets(scenario)), denoiser_(scenario.denoiser) {
  if (options.width < 1 || options.height < 1 || options.width > kMaxLiveDim || options.height > kMaxLiveDim) {
    throw std::invalid_argument("session dims must be within [1, " + std::to_string(kMaxLiveDim) + "]");
  }
  if (options.spp < 1 || options.spp > kMaxLiveSpp) {
    throw std::invalid_argument("session spp must be within [1, " + std::to_string(kMaxLiveSpp) + "]");
  }
  current_.scene = live_scene(scenario, options);
  current_.pose = OrbitPose::from_camera(current_.scene.camera.front());
  current_.options = options;
}

std::optional<std::string> Session::handle_control(const std::string& text) {
  ControlMessage msg;
  try {
    msg = parse_control(text);
  } catch (const ControlError& e) {
    return std::string(e.what());
  }
  if (const auto* edit = std::get_if<LightEdit>(&msg)) {
    std::lock_guard lock(queue_mutex_);
    // Light count never changes during a session.
    if (static_cast<std::size_t>(edit->index) >= current_.scene.lights.size()) {
      return "/index: light " + std::to_string(edit->index) + " does not exist (scene has " +
             std::to_string(current_.scene.lights.size()) + ")";
    }
    queue_.push_back(msg);
    return std::nullopt;
  }
  enqueue(msg);
  return std::nullopt;
}

void Session::enqueue(const ControlMessage& message) {
  std::lock_guard lock(queue_mutex_);
  queue_.push_back(message);
}

std::size_t Session::pending() const {
  std::lock_guard lock(queue_mutex_);
  return queue_.size();
}

void Session::apply(const ControlMessage& message, SessionSnapshot& next, bool& reset_dims) {
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, CameraOrbit>) {
          OrbitPose& pose = next.pose;
          pose.theta += m.dtheta;
          pose.phi = std::clamp(pose.phi + m.dphi, -kMaxElevation, kMaxElevation);
          pose.distance *= std::exp(m.dzoom);
          CameraKey& key = next.scene.camera.front();
          key.position = pose.position();
        } else if constexpr (std::is_same_v<T, LightEdit>) {
          if (static_cast<std::size_t>(m.index) >= next.scene.lights.size()) return;
          LightTrack& track = next.scene.lights[m.index];
          LightKey& key = track.keys.front();
          if (m.position) {
            if (track.kind == LightKind::kArea) {
              key.corner = *m.position - 0.5 * (key.edge0 + key.edge1);
            } else {
              key.position = *m.position;
            }
          }
          if (m.intensity) key.power = *m.intensity;
        } else if constexpr (std::is_same_v<T, TransferFunctionEdit>) {
          TransferFunction& tf = next.scene.transfer_function.front().tf;
          tf = TransferFunction(m.points, m.density_scale.value_or(tf.density_scale()));
        } else {
          if (m.spp) next.options.spp = *m.spp;
          if (m.denoiser) next.options.denoiser = *m.denoiser;
          if (m.display) next.options.display = *m.display;
          if (m.dims && (m.dims->first != next.options.width || m.dims->second != next.options.height)) {
            next.options.width = m.dims->first;
            next.options.height = m.dims->second;
            reset_dims = true;
          }
        }
      },
      message);
}

StepResult Session::step() {
  std::vector<ControlMessage> messages;
  {
    std::lock_guard lock(queue_mutex_);
    messages.swap(queue_);
  }
  SessionSnapshot next = current_;
  bool reset_dims = false;
  for (const ControlMessage& m : messages) apply(m, next, reset_dims);
  next.scene.width = next.options.width;
  next.scene.height = next.options.height;
  next.scene.spp = next.options.spp;
  {
    std::lock_guard lock(queue_mutex_);
    current_ = std::move(next);
  }
  if (reset_dims) {
    denoiser_.reset(current_.options.width, current_.options.height);
    previous_view_projection_.reset();
  }

  const auto t0 = std::chrono::steady_clock::now();
  const FrameScene fs = scene_at_frame(current_.scene, 0, assets_);
  const std::uint64_t seed = frame_seed(current_.scene.seed, frame_counter_);
  FrameEstimate est = render_frame(fs.scene, fs.camera, current_.options.spp, seed, frame_counter_);
  const auto t1 = std::chrono::steady_clock::now();

  StepResult out;
  out.camera = current_.scene.camera.front();
  if (current_.options.denoiser) {
    const Mat4 vp = fs.camera.view_projection();
    const MotionField motion = previous_view_projection_
                                   ? compute_motion_field(est, *previous_view_projection_, vp)
                                   : MotionField::zero(est.radiance.width(), est.radiance.height());
    DenoiseResult dn = denoiser_.process(est.radiance, motion);
    previous_view_projection_ = vp;
    out.denoised = std::move(dn.image);
  }
  const auto t2 = std::chrono::steady_clock::now();
  out.noisy = std::move(est.radiance);

  const double exposure = current_.scene.exposure;
  ImageRGB shown;
  const bool have_denoised = !out.denoised.empty();
  switch (current_.options.display) {
    case DisplayBuffer::kDenoised:
      shown = tone_map(have_denoised ? out.denoised : out.noisy, exposure);
      break;
    case DisplayBuffer::kNoisy:
      shown = tone_map(out.noisy, exposure);
      break;
    case DisplayBuffer::kFeature: {
      const DenoiserState& st = denoiser_.state();
      if (have_denoised && st.width() == out.noisy.width() && st.height() == out.noisy.height()) {
        ImageRGB z(st.width(), st.height());
        for (std::size_t i = 0; i < st.size(); ++i) z[i] = st[i].z.cast<float>();
        shown = tone_map(z, exposure);
      } else {
        shown = tone_map(out.noisy, exposure);
      }
      break;
    }
    case DisplayBuffer::kError: {
      const ImageRGB noisy_ldr = tone_map(out.noisy, exposure);
      const ImageRGB other = have_denoised ? tone_map(out.denoised, exposure) : noisy_ldr;
      shown = false_color(error_map(other, noisy_ldr), 0.25f);
      break;
    }
  }

  out.packet.frame_id = frame_counter_;
  out.packet.width = static_cast<std::uint16_t>(shown.width());
  out.packet.height = static_cast<std::uint16_t>(shown.height());
  out.packet.render_ms = std::chrono::duration<float, std::milli>(t1 - t0).count();
  out.packet.denoise_ms = std::chrono::duration<float, std::milli>(t2 - t1).count();
  out.packet.rgba = to_rgba8(shown);
  ++frame_counter_;
  return out;
}

// ---- server ---------------------------------------------------------------

namespace {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

std::string mime_type(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html";
  if (ext == ".js" || ext == ".mjs") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".png") return "image/png";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".wasm") return "application/wasm";
  return "application/octet-stream";
}

/// Maps a request target onto a file below root; empty when it escapes.
std::optional<std::filesystem::path> resolve_static(const std::filesystem::path& root, std::string_view target) {
  std::string path(target.substr(0, target.find('?')));
  if (path.empty() || path.front() != '/') return std::nullopt;
  if (path.back() == '/') path += "index.html";
  const std::filesystem::path rel = std::filesystem::path(path.substr(1)).lexically_normal();
  for (const auto& part : rel) {
    if (part == "..") return std::nullopt;
  }
  return root / rel;
}

class SessionConnection : public std::enable_shared_from_this<SessionConnection> {
 public:
  SessionConnection(tcp::socket socket, const ServeOptions& options)
      : ws_(std::move(socket)), session_(options.scenario, options.session), max_frames_(options.max_frames) {}

  template <class Request>
  void accept(Request req, std::vector<std::thread>& threads, std::mutex& threads_mutex) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this(), &threads, &threads_mutex](beast::error_code ec) {
      if (ec) return;
      self->read();
      std::lock_guard lock(threads_mutex);
      threads.emplace_back([self] { self->render_loop(); });
    });
  }

  void shutdown() {
    stop_rendering();
    net::post(ws_.get_executor(), [self = shared_from_this()] { self->close(); });
  }

 private:
  struct Outgoing {
    std::string bytes;
    bool binary = false;
  };

  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->stop_rendering();
        return;
      }
      const std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      if (auto reason = self->session_.handle_control(text)) self->send(error_reply(*reason).dump(), false);
      self->read();
    });
  }

  void render_loop() {
    std::uint32_t sent = 0;
    while (!closing_) {
      {
        std::unique_lock lock(flow_mutex_);
        flow_.wait(lock, [&] { return closing_ || in_flight_ < 2; });
        if (closing_) break;
        ++in_flight_;
      }
      std::string bytes;
      try {
        const std::vector<std::uint8_t> packet = encode_packet(session_.step().packet);
        bytes.assign(packet.begin(), packet.end());
      } catch (const std::exception& e) {
        net::post(ws_.get_executor(), [self = shared_from_this(), reason = std::string(e.what())] {
          self->send(error_reply(reason).dump(), false);
          self->close();
        });
        break;
      }
      net::post(ws_.get_executor(),
                [self = shared_from_this(), bytes = std::move(bytes)]() mutable { self->send(std::move(bytes), true); });
      if (max_frames_ > 0 && ++sent >= max_frames_) {
        net::post(ws_.get_executor(), [self = shared_from_this()] { self->close_after_flush(); });
        break;
      }
    }
  }

  void send(std::string bytes, bool binary) {
    outgoing_.push_back({std::move(bytes), binary});
    if (!writing_) write_next();
  }

  void write_next() {
    if (outgoing_.empty()) {
      writing_ = false;
      if (close_pending_) close();
      return;
    }
    writing_ = true;
    ws_.binary(outgoing_.front().binary);
    ws_.async_write(net::buffer(outgoing_.front().bytes),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      const bool was_frame = self->outgoing_.front().binary;
                      self->outgoing_.pop_front();
                      if (was_frame) self->release_frame();
                      if (ec) {
                        self->stop_rendering();
                        return;
                      }
                      self->write_next();
                    });
  }

  void release_frame() {
    {
      std::lock_guard lock(flow_mutex_);
      --in_flight_;
    }
    flow_.notify_all();
  }

  void stop_rendering() {
    {
      std::lock_guard lock(flow_mutex_);
      closing_ = true;
    }
    flow_.notify_all();
  }

  void close_after_flush() {
    close_pending_ = true;
    if (!writing_) close();
  }

  void close() {
    stop_rendering();
    if (closed_ || !ws_.is_open()) return;
    closed_ = true;
    ws_.async_close(websocket::close_code::normal, [self = shared_from_this()](beast::error_code) {});
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  Session session_;
  std::uint32_t max_frames_;
  std::deque<Outgoing> outgoing_;
  bool writing_ = false;
  bool close_pending_ = false;
  bool closed_ = false;
  std::mutex flow_mutex_;
  std::condition_variable flow_;
  int in_flight_ = 0;
  std::atomic<bool> closing_{false};
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
 public:
  HttpConnection(tcp::socket socket, const ServeOptions& options,
                 std::function<void(std::shared_ptr<SessionConnection>)> on_session,
                 std::vector<std::thread>& threads, std::mutex& threads_mutex)
      : stream_(std::move(socket)), options_(options), on_session_(std::move(on_session)), threads_(threads),
        threads_mutex_(threads_mutex) {}

  void start() {
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, request_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (!ec) self->handle();
    });
  }

 private:
  void handle() {
    if (websocket::is_upgrade(request_)) {
      if (request_.target() != "/session") {
        respond(http::status::not_found, "text/plain", "unknown websocket endpoint\n");
        return;
      }
      stream_.expires_never();
      std::shared_ptr<SessionConnection> conn;
      try {
        conn = std::make_shared<SessionConnection>(stream_.release_socket(), options_);
      } catch (const std::exception& e) {
        std::cerr << "session setup failed: " << e.what() << "\n";
        return;
      }
      on_session_(conn);
      conn->accept(std::move(request_), threads_, threads_mutex_);
      return;
    }
    if (request_.method() != http::verb::get && request_.method() != http::verb::head) {
      respond(http::status::method_not_allowed, "text/plain", "method not allowed\n");
      return;
    }
    if (options_.static_dir.empty()) {
      respond(http::status::not_found, "text/plain", "no static directory configured\n");
      return;
    }
    const auto path = resolve_static(options_.static_dir,
                                     std::string_view(request_.target().data(), request_.target().size()));
    if (!path) {
      respond(http::status::bad_request, "text/plain", "bad path\n");
      return;
    }
    std::ifstream in(*path, std::ios::binary);
    if (!in) {
      respond(http::status::not_found, "text/plain", "not found\n");
      return;
    }
    std::ostringstream body;
    body << in.rdbuf();
    respond(http::status::ok, mime_type(*path), body.str());
  }

  void respond(http::status status, const std::string& type, std::string body) {
    auto res = std::make_shared<http::response<http::string_body>>(status, request_.version());
    res->set(http::field::server, "vptdn");
    res->set(http::field::content_type, type);
    res->keep_alive(false);
    if (request_.method() != http::verb::head) res->body() = std::move(body);
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
      beast::error_code ignored;
      self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
    });
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> request_;
  const ServeOptions& options_;
  std::function<void(std::shared_ptr<SessionConnection>)> on_session_;
  std::vector<std::thread>& threads_;
  std::mutex& threads_mutex_;
};

}  // namespace

struct Server::Impl {
  explicit Impl(ServeOptions o) : options(std::move(o)), acceptor(ioc) {}

  void accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      std::make_shared<HttpConnection>(
          std::move(socket), options,
          [this](std::shared_ptr<SessionConnection> c) {
            std::lock_guard lock(sessions_mutex);
            sessions.push_back(c);
          },
          threads, threads_mutex)
          ->start();
      accept();
    });
  }

  ServeOptions options;
  net::io_context ioc;
  tcp::acceptor acceptor;
  std::thread io_thread;
  std::mutex sessions_mutex;
  std::vector<std::weak_ptr<SessionConnection>> sessions;
  std::mutex threads_mutex;
  std::vector<std::thread> threads;
  std::mutex state_mutex;
  std::condition_variable state_cv;
  bool running = false;
  bool stopped = false;
};

Server::Server(ServeOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {
  impl_->options.scenario.validate();
}

Server::~Server() { stop(); }

void Server::start() {
  Impl& s = *impl_;
  const tcp::endpoint endpoint(net::ip::make_address(s.options.address), s.options.port);
  s.acceptor.open(endpoint.protocol());
  s.acceptor.set_option(net::socket_base::reuse_address(true));
  s.acceptor.bind(endpoint);
  s.acceptor.listen(net::socket_base::max_listen_connections);
  s.accept();
  s.io_thread = std::thread([&s] { s.ioc.run(); });
  std::lock_guard lock(s.state_mutex);
  s.running = true;
}

void Server::stop() {
  Impl& s = *impl_;
  {
    std::lock_guard lock(s.state_mutex);
    if (!s.running || s.stopped) return;
    s.stopped = true;
  }
  net::post(s.ioc, [&s] {
    beast::error_code ignored;
    s.acceptor.close(ignored);
  });
  {
    std::lock_guard lock(s.sessions_mutex);
    for (auto& weak : s.sessions) {
      if (auto c = weak.lock()) c->shutdown();
    }
  }
  // Give close frames a moment to go out before tearing the loop down.
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  s.ioc.stop();
  {
    std::lock_guard lock(s.threads_mutex);
    for (std::thread& t : s.threads) {
      if (t.joinable()) t.join();
    }
    s.threads.clear();
  }
  if (s.io_thread.joinable()) s.io_thread.join();
  s.state_cv.notify_all();
}

void Server::wait() {
  std::unique_lock lock(impl_->state_mutex);
  impl_->state_cv.wait(lock, [&] { return impl_->stopped; });
}

unsigned short Server::port() const { return impl_->acceptor.local_endpoint().port(); }

void serve(const ServeOptions& options) {
  Server server(options);
  server.start();
  std::cout << "listening on http://" << options.address << ":" << server.port() << " (websocket /session)"
            << std::endl;
  net::io_context signals_ctx;
  net::signal_set signals(signals_ctx, SIGINT, SIGTERM);
  signals.async_wait([&](const beast::error_code&, int) { server.stop(); });
  signals_ctx.run();
}

}  // namespace vptdn
