// Copyright 2026 The vptdn Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "vptdn/color.hpp"
#include "vptdn/metrics.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace vptdn;

namespace {

ImageRGB random_image(int w, int h, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  ImageRGB img(w, h);
  for (auto& p : img.pixels()) p = Colorf(u(rng), u(rng), u(rng));
  return img;
}

long double psnr_oracle(const ImageRGB& a, const ImageRGB& b) {
  long double se = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (int c = 0; c < 3; ++c) {
      const long double d = static_cast<long double>(a[i][c]) - static_cast<long double>(b[i][c]);
      se += d * d;
    }
  }
  return 10.0L * std::log10(1.0L / (se / (3.0L * a.size())));
}

// Direct 2-D windowed SSIM, window clipped at the border and renormalized.
double ssim_oracle(const ImageRGB& a, const ImageRGB& b) {
  const int w = a.width(), h = a.height();
  auto luma = [](const Colorf& c) { return 0.2126 * c[0] + 0.7152 * c[1] + 0.0722 * c[2]; };
  const double c1 = 1e-4, c2 = 9e-4;
  double total = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double ws = 0, ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
      for (int dy = -5; dy <= 5; ++dy) {
        for (int dx = -5; dx <= 5; ++dx) {
          if (x + dx < 0 || y + dy < 0 || x + dx >= w || y + dy >= h) continue;
          const double g = std::exp(-(dx * dx + dy * dy) / 4.5);
          const double la = luma(a(x + dx, y + dy)), lb = luma(b(x + dx, y + dy));
          ws += g;
          ma += g * la;
          mb += g * lb;
          saa += g * la * la;
          sbb += g * lb * lb;
          sab += g * la * lb;
        }
      }
      ma /= ws;
      mb /= ws;
      const double va = saa / ws - ma * ma, vb = sbb / ws - mb * mb, cov = sab / ws - ma * mb;
      total += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
  }
  return total / (w * h);
}

}  // namespace

TEST_CASE("tone mapping") {
  const ImageRGB zero(4, 3, Colorf::Zero());
  const ImageRGB mapped = tone_map(zero, 1.0);
  for (const auto& p : mapped.pixels()) CHECK((p == 0.0f).all());

  const Color white_xyz = rgb_to_xyz(Color::Ones());
  const ImageRGB white(1, 1, white_xyz.cast<float>());
  const Colorf out = tone_map(white, 1.0)(0, 0);
  CHECK(out[0] == doctest::Approx(out[1]).epsilon(1e-5));
  CHECK(out[1] == doctest::Approx(out[2]).epsilon(1e-5));
  // Reinhard of 1 is 0.5, then sRGB encoding.
  CHECK(out[0] == doctest::Approx(1.055 * std::pow(0.5, 1.0 / 2.4) - 0.055).epsilon(1e-5));

  // Monotone per channel along a gray ramp.
  float prev = -1.0f;
  for (double v = 0.0; v < 50.0; v += 0.25) {
    const Colorf m = tone_map(ImageRGB(1, 1, rgb_to_xyz(Color::Constant(v)).cast<float>()), 1.3)(0, 0);
    REQUIRE(m[1] >= prev);
    REQUIRE((m >= 0.0f).all());
    REQUIRE((m <= 1.0f).all());
    prev = m[1];
  }
}

TEST_CASE("psnr") {
  std::mt19937_64 rng(1);
  const ImageRGB a = random_image(17, 9, rng);
  CHECK(psnr(a, a) == kPsnrCap);

  ImageRGB c(17, 9, Colorf::Constant(0.2f));
  ImageRGB d(17, 9, Colorf::Constant(0.3f));
  CHECK(psnr(c, d) == doctest::Approx(20.0).epsilon(1e-5));

  for (int trial = 0; trial < 10; ++trial) {
    const ImageRGB x = random_image(23, 19, rng);
    const ImageRGB y = random_image(23, 19, rng);
    CHECK(std::abs(psnr(x, y) - static_cast<double>(psnr_oracle(x, y))) < 1e-6);
  }

  double prev = kPsnrCap + 1.0;
  for (float amp : {0.01f, 0.02f, 0.05f, 0.1f, 0.2f}) {
    ImageRGB noisy = a;
    std::mt19937_64 r2(5);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    for (auto& p : noisy.pixels()) p += amp * Colorf(u(r2), u(r2), u(r2));
    const double v = psnr(a, noisy);
    CHECK(v < prev);
    prev = v;
  }
  CHECK_THROWS_AS(psnr(a, ImageRGB(3, 3)), MetricError);
}

TEST_CASE("ssim") {
  std::mt19937_64 rng(2);
  const ImageRGB a = random_image(20, 14, rng);
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));

  const ImageRGB b = random_image(20, 14, rng);
  CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-12));
  CHECK(ssim(a, b) == doctest::Approx(ssim_oracle(a, b)).epsilon(1e-9));

  // Binary checkerboard against its inverse.
  ImageRGB bin(11, 11), inv(11, 11);
  for (int y = 0; y < 11; ++y) {
    for (int x = 0; x < 11; ++x) {
      const float v = ((x * 7 + y * 3) % 5) < 2 ? 1.0f : 0.0f;
      bin(x, y) = Colorf::Constant(v);
      inv(x, y) = Colorf::Constant(1.0f - v);
    }
  }
  CHECK(ssim(bin, inv) < 0.1);
  CHECK(ssim(bin, inv) == doctest::Approx(ssim_oracle(bin, inv)).epsilon(1e-9));

  // Constant patches: zero variance reduces SSIM to the luminance term.
  const double la = 0.3, lb = 0.7, c1 = 1e-4;
  const double expected = (2 * la * lb + c1) / (la * la + lb * lb + c1);
  CHECK(ssim(ImageRGB(8, 8, Colorf::Constant(0.3f)), ImageRGB(8, 8, Colorf::Constant(0.7f))) ==
        doctest::Approx(expected).epsilon(1e-6));
  CHECK_THROWS_AS(ssim(a, ImageRGB(3, 3)), MetricError);
}

TEST_CASE("flicker score") {
  std::vector<ImageRGB> same(5, ImageRGB(6, 6, Colorf::Constant(0.4f)));
  CHECK(flicker_score(same) == 0.0);

  std::vector<ImageRGB> alt;
  for (int t = 0; t < 6; ++t) alt.emplace_back(6, 6, Colorf::Constant(t % 2 ? 1.0f : 0.0f));
  CHECK(flicker_score(alt) == doctest::Approx(1.0));

  std::mt19937_64 rng(3);
  std::vector<ImageRGB> noise;
  for (int t = 0; t < 64; ++t) noise.push_back(random_image(32, 32, rng));
  CHECK(flicker_score(noise) == doctest::Approx(1.0 / 6.0).epsilon(0.05));

  CHECK_THROWS_AS(flicker_score(std::vector<ImageRGB>(1, ImageRGB(2, 2))), MetricError);
}

TEST_CASE("error map") {
  std::mt19937_64 rng(4);
  const ImageRGB a = random_image(5, 4, rng);
  const ImageGray same = error_map(a, a);
  for (float v : same.pixels()) CHECK(v == 0.0f);
  ImageRGB b = a;
  b(2, 1) += Colorf(0.3f, 0.0f, 0.0f);
  const ImageGray e = error_map(a, b);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 5; ++x) CHECK(e(x, y) == doctest::Approx(x == 2 && y == 1 ? 0.1 : 0.0).epsilon(1e-5));
  }
  const ImageRGB c = random_image(5, 4, rng);
  CHECK(error_map(a, c) == error_map(c, a));
  const ImageRGB fc = false_color(e, 0.1f);
  CHECK(fc.width() == 5);
  CHECK_THROWS_AS(error_map(a, ImageRGB(1, 1)), MetricError);
}

TEST_CASE("sequence report and csv") {
  std::mt19937_64 rng(6);
  std::vector<ImageRGB> ref, in, dn;
  for (int t = 0; t < 3; ++t) {
    ref.push_back(random_image(16, 16, rng));
    in.push_back(random_image(16, 16, rng));
    dn.push_back(ref.back());
  }
  const MetricReport r = evaluate_sequences(in, dn, ref, 1.0);
  REQUIRE(r.frames.size() == 3);
  CHECK(r.mean_psnr_denoised() == kPsnrCap);
  CHECK(r.mean_ssim_denoised() == doctest::Approx(1.0));
  CHECK(r.mean_psnr_input() < 30.0);

  const auto path = std::filesystem::temp_directory_path() / "vptdn_metrics.csv";
  r.write_csv(path);
  std::ifstream f(path);
  std::string line;
  std::getline(f, line);
  CHECK(line == "frame,psnr_input,psnr_denoised,ssim_input,ssim_denoised");
  int rows = 0;
  std::vector<std::string> labels;
  while (std::getline(f, line)) {
    ++rows;
    labels.push_back(line.substr(0, line.find(',')));
  }
  CHECK(rows == 6);
  CHECK(labels[0] == "0");
  CHECK(labels[3] == "mean");
  CHECK(labels[5] == "flicker");
}
