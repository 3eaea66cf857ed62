// Copyright 2026 The vptdn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vptdn/image.hpp"

#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

namespace vptdn {

class MetricError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double kPsnrCap = 99.0;

/// XYZ -> linear sRGB, * exposure, Reinhard x/(1+x), sRGB encode, clamp.
ImageRGB tone_map(const ImageRGB& xyz, double exposure);

/// 10 log10(peak^2 / MSE) over all channels; identical images give kPsnrCap.
double psnr(const ImageRGB& a, const ImageRGB& b, double peak = 1.0);

/// Mean SSIM on Rec. 709 luma: 11x11 Gaussian window (sigma 1.5), windows
/// truncated at the border and renormalized.
double ssim(const ImageRGB& a, const ImageRGB& b, double peak = 1.0);

/// Mean over consecutive pairs of the per-pixel, per-channel MSE.
double flicker_score(std::span<const ImageRGB> frames);

/// Per-pixel mean absolute channel difference.
ImageGray error_map(const ImageRGB& a, const ImageRGB& b);

/// Maps [0, max_value] through a blue-green-yellow-red ramp.
ImageRGB false_color(const ImageGray& map, float max_value);

struct FrameMetrics {
  int frame = 0;
  double psnr_input = 0.0;
  double psnr_denoised = 0.0;
  double ssim_input = 0.0;
  double ssim_denoised = 0.0;
};

struct MetricReport {
  std::vector<FrameMetrics> frames;
  double flicker_input = 0.0;
  double flicker_denoised = 0.0;

  double mean_psnr_input() const;
  double mean_psnr_denoised() const;
  double mean_ssim_input() const;
  double mean_ssim_denoised() const;
  double std_psnr_input() const;
  double std_psnr_denoised() const;

  void write_csv(const std::filesystem::path& path) const;
};

/// Compares tone-mapped input and denoised sequences against a reference;
/// all three are HDR XYZ and share one exposure.
MetricReport evaluate_sequences(std::span<const ImageRGB> input, std::span<const ImageRGB> denoised,
                                std::span<const ImageRGB> reference, double exposure);

}  // namespace vptdn
