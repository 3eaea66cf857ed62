// Copyright 2026 The vptdn Authors
// SPDX-License-Identifier: Apache-2.0

#include "vptdn/metrics.hpp"

#include "vptdn/color.hpp"
#include "vptdn/parallel.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

namespace vptdn {
namespace {

void require_same_dims(const ImageRGB& a, const ImageRGB& b, const char* what) {
  if (!a.same_dims(b)) {
    throw MetricError(std::string(what) + ": image dims differ (" + std::to_string(a.width()) + "x" +
                      std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                      std::to_string(b.height()) + ")");
  }
}

// Separable blur with a truncated, renormalized 1-D kernel.
std::vector<double> blur(const std::vector<double>& src, int width, int height, const std::vector<double>& kernel) {
  const int r = static_cast<int>(kernel.size() / 2);
  std::vector<double> tmp(src.size()), out(src.size());
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double acc = 0.0, wsum = 0.0;
      for (int k = -r; k <= r; ++k) {
        const int xx = x + k;
        if (xx < 0 || xx >= width) continue;
        const double w = kernel[static_cast<std::size_t>(k + r)];
        acc += w * src[static_cast<std::size_t>(y) * width + xx];
        wsum += w;
      }
      tmp[static_cast<std::size_t>(y) * width + x] = acc / wsum;
    }
  }
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double acc = 0.0, wsum = 0.0;
      for (int k = -r; k <= r; ++k) {
        const int yy = y + k;
        if (yy < 0 || yy >= height) continue;
        const double w = kernel[static_cast<std::size_t>(k + r)];
        acc += w * tmp[static_cast<std::size_t>(yy) * width + x];
        wsum += w;
      }
      out[static_cast<std::size_t>(y) * width + x] = acc / wsum;
    }
  }
  return out;
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

}  // namespace

ImageRGB tone_map(const ImageRGB& xyz, double exposure) {
  if (!(exposure > 0.0)) throw MetricError("tone_map: exposure must be > 0");
  ImageRGB out(xyz.width(), xyz.height());
  for (std::size_t i = 0; i < xyz.size(); ++i) {
    const Color rgb = xyz_to_rgb(xyz[i].cast<double>()).max(0.0) * exposure;
    Colorf ldr;
    for (int c = 0; c < 3; ++c) {
      const double reinhard = rgb[c] / (1.0 + rgb[c]);
      ldr[c] = static_cast<float>(std::clamp(srgb_encode(reinhard), 0.0, 1.0));
    }
    out[i] = ldr;
  }
  return out;
}

double psnr(const ImageRGB& a, const ImageRGB& b, double peak) {
  require_same_dims(a, b, "psnr");
  if (a.empty()) throw MetricError("psnr: empty images");
  double se = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Color d = a[i].cast<double>() - b[i].cast<double>();
    se += d.square().sum();
  }
  const double mse = se / (3.0 * static_cast<double>(a.size()));
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

double ssim(const ImageRGB& a, const ImageRGB& b, double peak) {
  require_same_dims(a, b, "ssim");
  if (a.empty()) throw MetricError("ssim: empty images");
  const int width = a.width();
  const int height = a.height();
  const std::size_t n = a.size();
  std::vector<double> la(n), lb(n), aa(n), bb(n), ab(n);
  for (std::size_t i = 0; i < n; ++i) {
    la[i] = luma709(a[i].cast<double>());
    lb[i] = luma709(b[i].cast<double>());
    aa[i] = la[i] * la[i];
    bb[i] = lb[i] * lb[i];
    ab[i] = la[i] * lb[i];
  }
  std::vector<double> kernel(11);
  for (int k = -5; k <= 5; ++k) kernel[static_cast<std::size_t>(k + 5)] = std::exp(-(k * k) / (2.0 * 1.5 * 1.5));
  const auto mu_a = blur(la, width, height, kernel);
  const auto mu_b = blur(lb, width, height, kernel);
  const auto e_aa = blur(aa, width, height, kernel);
  const auto e_bb = blur(bb, width, height, kernel);
  const auto e_ab = blur(ab, width, height, kernel);
  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double var_a = std::max(0.0, e_aa[i] - mu_a[i] * mu_a[i]);
    const double var_b = std::max(0.0, e_bb[i] - mu_b[i] * mu_b[i]);
    const double cov = e_ab[i] - mu_a[i] * mu_b[i];
    total += ((2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2)) /
             ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (var_a + var_b + c2));
  }
  return std::clamp(total / static_cast<double>(n), -1.0, 1.0);
}

double flicker_score(std::span<const ImageRGB> frames) {
  if (frames.size() < 2) throw MetricError("flicker_score: at least two frames required");
  double total = 0.0;
  for (std::size_t t = 1; t < frames.size(); ++t) {
    require_same_dims(frames[t - 1], frames[t], "flicker_score");
    double se = 0.0;
    for (std::size_t i = 0; i < frames[t].size(); ++i) {
      se += (frames[t][i].cast<double>() - frames[t - 1][i].cast<double>()).square().sum();
    }
    total += se / (3.0 * static_cast<double>(frames[t].size()));
  }
  return total / static_cast<double>(frames.size() - 1);
}

ImageGray error_map(const ImageRGB& a, const ImageRGB& b) {
  require_same_dims(a, b, "error_map");
  ImageGray out(a.width(), a.height());
  for (std::size_t i = 0; i < a.size(); ++i) {
    out[i] = static_cast<float>((a[i].cast<double>() - b[i].cast<double>()).abs().sum() / 3.0);
  }
  return out;
}

ImageRGB false_color(const ImageGray& map, float max_value) {
  ImageRGB out(map.width(), map.height());
  const float scale = max_value > 0.0f ? 1.0f / max_value : 0.0f;
  for (std::size_t i = 0; i < map.size(); ++i) {
    const float t = std::clamp(map[i] * scale, 0.0f, 1.0f);
    // blue -> cyan -> green -> yellow -> red
    const float r = std::clamp(4.0f * t - 2.0f, 0.0f, 1.0f);
    const float g = t < 0.75f ? std::clamp(4.0f * t, 0.0f, 1.0f) : std::clamp(4.0f - 4.0f * t, 0.0f, 1.0f);
    const float b = std::clamp(2.0f - 4.0f * t, 0.0f, 1.0f);
    out[i] = Colorf(r, g, b);
  }
  return out;
}

double MetricReport::mean_psnr_input() const {
  std::vector<double> v;
  for (const auto& f : frames) v.push_back(f.psnr_input);
  return mean(v);
}
double MetricReport::mean_psnr_denoised() const {
  std::vector<double> v;
  for (const auto& f : frames) v.push_back(f.psnr_denoised);
  return mean(v);
}
double MetricReport::mean_ssim_input() const {
  std::vector<double> v;
  for (const auto& f : frames) v.push_back(f.ssim_input);
  return mean(v);
}
double MetricReport::mean_ssim_denoised() const {
  std::vector<double> v;
  for (const auto& f : frames) v.push_back(f.ssim_denoised);
  return mean(v);
}
double MetricReport::std_psnr_input() const {
  std::vector<double> v;
  for (const auto& f : frames) v.push_back(f.psnr_input);
  return stddev(v);
}
double MetricReport::std_psnr_denoised() const {
  std::vector<double> v;
  for (const auto& f : frames) v.push_back(f.psnr_denoised);
  return stddev(v);
}

void MetricReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  char line[256];
  out << "frame,psnr_input,psnr_denoised,ssim_input,ssim_denoised\n";
  for (const auto& f : frames) {
    std::snprintf(line, sizeof(line), "%d,%.6f,%.6f,%.6f,%.6f\n", f.frame, f.psnr_input, f.psnr_denoised,
                  f.ssim_input, f.ssim_denoised);
    out << line;
  }
  std::snprintf(line, sizeof(line), "mean,%.6f,%.6f,%.6f,%.6f\n", mean_psnr_input(), mean_psnr_denoised(),
                mean_ssim_input(), mean_ssim_denoised());
  out << line;
  std::snprintf(line, sizeof(line), "std,%.6f,%.6f,,\n", std_psnr_input(), std_psnr_denoised());
  out << line;
  std::snprintf(line, sizeof(line), "flicker,%.8f,%.8f,,\n", flicker_input, flicker_denoised);
  out << line;
}

MetricReport evaluate_sequences(std::span<const ImageRGB> input, std::span<const ImageRGB> denoised,
                                std::span<const ImageRGB> reference, double exposure) {
  if (input.size() != reference.size() || denoised.size() != reference.size()) {
    throw MetricError("evaluate_sequences: sequence lengths differ");
  }
  const std::size_t n = reference.size();
  std::vector<ImageRGB> in_ldr(n), dn_ldr(n);
  MetricReport report;
  report.frames.resize(n);
  parallel_for(0, static_cast<int>(n), [&](int t) {
    const auto i = static_cast<std::size_t>(t);
    in_ldr[i] = tone_map(input[i], exposure);
    dn_ldr[i] = tone_map(denoised[i], exposure);
    const ImageRGB ref = tone_map(reference[i], exposure);
    FrameMetrics& m = report.frames[i];
    m.frame = t;
    m.psnr_input = psnr(in_ldr[i], ref);
    m.psnr_denoised = psnr(dn_ldr[i], ref);
    m.ssim_input = ssim(in_ldr[i], ref);
    m.ssim_denoised = ssim(dn_ldr[i], ref);
  });
  if (n >= 2) {
    report.flicker_input = flicker_score(in_ldr);
    report.flicker_denoised = flicker_score(dn_ldr);
  }
  return report;
}

}  // namespace vptdn
