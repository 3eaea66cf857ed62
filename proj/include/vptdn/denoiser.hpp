// Copyright 2026 The vptdn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vptdn/image.hpp"
#include "vptdn/math.hpp"
#include "vptdn/motion.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace vptdn {

struct DenoiserParams {
  double lambda = 0.998;   // forgetting factor
  double h = 0.75;         // sample-weight bandwidth
  double epsilon = 1e-4;   // division guard
  double alpha = 0.75;     // history share of the temporal feature
  double p0 = 100.0;       // initial inverse covariance scale
  double sigma_s = 1.5;    // spatial blend, pixels
  double sigma_r = 0.3;    // spatial blend, relative feature distance

  /// Throws std::invalid_argument naming the first out-of-range field.
  void validate() const;
  bool operator==(const DenoiserParams&) const = default;
};

/// [1, z_r, z_g, z_b]
using Predictor = Eigen::Vector4d;

inline Predictor make_predictor(const Color& z) { return Predictor(1.0, z[0], z[1], z[2]); }

/// Per-pixel regression state: one coefficient vector per channel sharing a
/// single inverse covariance, plus the temporal feature z.
struct PixelModel {
  Eigen::Matrix4d P = Eigen::Matrix4d::Identity();
  std::array<Eigen::Vector4d, 3> beta{};
  Color z = Color::Zero();
  bool valid = false;

  /// Coefficients select each channel's own feature with zero intercept, so
  /// the prediction equals z until the first update.
  static PixelModel reset(const Color& feature, double p0);
};

class DenoiserState {
 public:
  DenoiserState() = default;
  DenoiserState(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return pixels_.empty(); }
  std::size_t size() const { return pixels_.size(); }

  PixelModel& operator()(int x, int y) { return pixels_[index(x, y)]; }
  const PixelModel& operator()(int x, int y) const { return pixels_[index(x, y)]; }
  PixelModel& operator[](std::size_t i) { return pixels_[i]; }
  const PixelModel& operator[](std::size_t i) const { return pixels_[i]; }
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }
  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  /// Bumped whenever the buffers are reallocated or reset, never by a
  /// regular per-frame update.
  std::uint64_t version() const { return version_; }
  void set_version(std::uint64_t v) { version_ = v; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<PixelModel> pixels_;
  std::uint64_t version_ = 0;
};

struct DenoiserStats {
  std::uint64_t reset_pixels = 0;       // no usable history this frame
  std::uint64_t nonfinite_resets = 0;   // update produced a non-finite value
};

/// Fetches (z, beta, P) from round(j + v_j) in `prev`. Pixels without a
/// valid source are reset to the current estimate.
DenoiserState reproject_state(const DenoiserState& prev, const MotionField& motion, const ImageRGB& current,
                              const DenoiserParams& params, DenoiserStats* stats = nullptr);

/// z_j = alpha * clamp3x3(z_hist_j) + (1 - alpha) * I_j, where z_hist is the
/// reprojected feature already held by `reprojected`.
Image<Color> update_temporal_feature(const DenoiserState& reprojected, const ImageRGB& current, double alpha);

/// exp(-d^2 / h^2), d = |I - z| / (min(|I|, |z|) + eps); floored at the
/// smallest normal double so the weight stays in (0, 1].
double compute_sample_weight(const Color& estimate, const Color& feature, double h, double epsilon);

/// Weighted update of all three channel regressions and the shared P.
/// Returns false (after resetting the pixel) on a non-finite intermediate.
bool wrls_update_pixel(PixelModel& model, const Color& estimate, double weight, double lambda, double p0);

/// Plain RLS update (unit weight, gain denominator lambda + pPp).
bool rls_update_pixel(PixelModel& model, const Color& estimate, double lambda, double p0);

/// Raw per-channel prediction p * beta_c (may be negative).
Color temporal_predict(const PixelModel& model);

/// Cross-prediction blend over a 5x5 window with a bilateral weight on
/// pixel distance and relative feature distance.
ImageRGB spatial_filter(const DenoiserState& state, const DenoiserParams& params);

struct DenoiseResult {
  ImageRGB image;       // final output, clamped to >= 0
  ImageRGB temporal;    // per-pixel temporal predictions, clamped to >= 0
  ImageGray weights;    // w_j used this frame
  DenoiserState state;  // updated models
  DenoiserStats stats;
};

/// reproject -> feature update -> weight/update/predict -> spatial blend.
DenoiseResult denoise_frame(const DenoiserState& state, const ImageRGB& frame, const MotionField& motion,
                            const DenoiserParams& params);

/// Stateful wrapper threading DenoiserState across frames.
class Denoiser {
 public:
  explicit Denoiser(DenoiserParams params = {});

  const DenoiserParams& params() const { return params_; }
  const DenoiserState& state() const { return state_; }
  const DenoiserStats& last_stats() const { return last_stats_; }

  /// Drops all history and bumps the state version.
  void reset(int width, int height);

  /// The returned result's `state` is left empty; read state() instead.
  DenoiseResult process(const ImageRGB& frame, const MotionField& motion);

 private:
  DenoiserParams params_;
  DenoiserState state_;
  DenoiserStats last_stats_;
  std::uint64_t next_version_ = 1;
};

/// Writes z, per-channel coefficient planes and the weight map as PFM.
void write_denoiser_debug(const std::filesystem::path& dir, const DenoiserState& state, const ImageGray& weights);

}  // namespace vptdn
