// Copyright 2026 The vptdn Authors
// SPDX-License-Identifier: Apache-2.0

#include "vptdn/image.hpp"

#include <png.h>

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

namespace vptdn {
namespace {

struct PfmHeader {
  int channels = 0;
  int width = 0;
  int height = 0;
  bool little_endian = true;
};

std::string next_token(std::istream& in) {
  std::string tok;
  char c = 0;
  while (in.get(c)) {
    if (c == '#') {
      std::string skip;
      std::getline(in, skip);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(c);
  }
  return tok;
}

PfmHeader read_pfm_header(std::istream& in, const std::filesystem::path& path) {
  PfmHeader h;
  const std::string magic = next_token(in);
  if (magic == "PF") {
    h.channels = 3;
  } else if (magic == "Pf") {
    h.channels = 1;
  } else {
    throw IoError("not a PFM file: " + path.string());
  }
  try {
    h.width = std::stoi(next_token(in));
    h.height = std::stoi(next_token(in));
    const double scale = std::stod(next_token(in));
    h.little_endian = scale < 0.0;
  } catch (const std::exception&) {
    throw IoError("malformed PFM header: " + path.string());
  }
  if (h.width <= 0 || h.height <= 0) throw IoError("invalid PFM dimensions: " + path.string());
  return h;
}

std::vector<float> read_pfm_payload(const std::filesystem::path& path, PfmHeader& h) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  h = read_pfm_header(in, path);
  const std::size_t count = static_cast<std::size_t>(h.width) * h.height * h.channels;
  std::vector<float> data(count);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(count * sizeof(float)));
  if (static_cast<std::size_t>(in.gcount()) != count * sizeof(float)) {
    throw IoError("truncated PFM payload: " + path.string());
  }
  const bool host_little = std::endian::native == std::endian::little;
  if (h.little_endian != host_little) {
    for (float& f : data) {
      auto bits = std::bit_cast<std::uint32_t>(f);
      bits = ((bits & 0xFFu) << 24) | ((bits & 0xFF00u) << 8) | ((bits >> 8) & 0xFF00u) | (bits >> 24);
      f = std::bit_cast<float>(bits);
    }
  }
  return data;
}

void write_pfm_raw(const std::filesystem::path& path, int width, int height, int channels,
                   const float* rows_top_down) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << (channels == 3 ? "PF" : "Pf") << '\n' << width << ' ' << height << '\n' << "-1.0\n";
  const std::size_t row = static_cast<std::size_t>(width) * channels;
  for (int y = height - 1; y >= 0; --y) {
    const float* src = rows_top_down + row * static_cast<std::size_t>(y);
    if constexpr (std::endian::native == std::endian::little) {
      out.write(reinterpret_cast<const char*>(src), static_cast<std::streamsize>(row * sizeof(float)));
    } else {
      for (std::size_t i = 0; i < row; ++i) {
        auto bits = std::bit_cast<std::uint32_t>(src[i]);
        char b[4] = {char(bits & 0xFF), char((bits >> 8) & 0xFF), char((bits >> 16) & 0xFF), char(bits >> 24)};
        out.write(b, 4);
      }
    }
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

void write_pfm(const std::filesystem::path& path, const ImageRGB& image) {
  std::vector<float> flat(image.size() * 3);
  for (std::size_t i = 0; i < image.size(); ++i) {
    flat[3 * i + 0] = image[i][0];
    flat[3 * i + 1] = image[i][1];
    flat[3 * i + 2] = image[i][2];
  }
  write_pfm_raw(path, image.width(), image.height(), 3, flat.data());
}

void write_pfm(const std::filesystem::path& path, const ImageGray& image) {
  write_pfm_raw(path, image.width(), image.height(), 1, image.pixels().data());
}

ImageRGB read_pfm_rgb(const std::filesystem::path& path) {
  PfmHeader h;
  const std::vector<float> data = read_pfm_payload(path, h);
  ImageRGB img(h.width, h.height);
  for (int y = 0; y < h.height; ++y) {
    const int src_row = h.height - 1 - y;
    for (int x = 0; x < h.width; ++x) {
      const std::size_t s = (static_cast<std::size_t>(src_row) * h.width + x) * h.channels;
      img(x, y) = h.channels == 3 ? Colorf(data[s], data[s + 1], data[s + 2]) : Colorf::Constant(data[s]);
    }
  }
  return img;
}

ImageGray read_pfm_gray(const std::filesystem::path& path) {
  PfmHeader h;
  const std::vector<float> data = read_pfm_payload(path, h);
  if (h.channels != 1) throw IoError("expected single-channel PFM: " + path.string());
  ImageGray img(h.width, h.height);
  for (int y = 0; y < h.height; ++y) {
    const int src_row = h.height - 1 - y;
    for (int x = 0; x < h.width; ++x) img(x, y) = data[static_cast<std::size_t>(src_row) * h.width + x];
  }
  return img;
}

void write_pgm(const std::filesystem::path& path, const ImageMask& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << image.width() << ' ' << image.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels().data()), static_cast<std::streamsize>(image.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

ImageMask read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  if (next_token(in) != "P5") throw IoError("not a binary PGM: " + path.string());
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(next_token(in));
    h = std::stoi(next_token(in));
    maxval = std::stoi(next_token(in));
  } catch (const std::exception&) {
    throw IoError("malformed PGM header: " + path.string());
  }
  if (w <= 0 || h <= 0 || maxval != 255) throw IoError("unsupported PGM: " + path.string());
  ImageMask img(w, h);
  in.read(reinterpret_cast<char*>(img.pixels().data()), static_cast<std::streamsize>(img.size()));
  if (static_cast<std::size_t>(in.gcount()) != img.size()) throw IoError("truncated PGM: " + path.string());
  return img;
}

void write_png(const std::filesystem::path& path, const ImageRGB& image) {
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.string().c_str(), "wb"), &std::fclose);
  if (!fp) throw IoError("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialization failed");
  }
  std::vector<png_byte> row(static_cast<std::size_t>(image.width()) * 3);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG encoding failed: " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, image.width(), image.height(), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < 3; ++c) {
        const float v = std::clamp(image(x, y)[c], 0.0f, 1.0f);
        row[3 * static_cast<std::size_t>(x) + c] = static_cast<png_byte>(std::lround(v * 255.0f));
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

std::uint64_t hash_image(const ImageRGB& image) {
  std::uint64_t h = 1469598103934665603ull;
  auto feed = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  const std::int32_t dims[2] = {image.width(), image.height()};
  feed(dims, sizeof(dims));
  for (std::size_t i = 0; i < image.size(); ++i) feed(image[i].data(), 3 * sizeof(float));
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace vptdn
