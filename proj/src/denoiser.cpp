// Copyright 2026 The vptdn Authors
// SPDX-License-Identifier: Apache-2.0

#include "vptdn/denoiser.hpp"

#include "vptdn/parallel.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace vptdn {

void DenoiserParams::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("denoiser parameter " + what); };
  if (!(lambda > 0.0 && lambda <= 1.0)) fail("lambda must lie in (0, 1]");
  if (!(h > 0.0) || !std::isfinite(h)) fail("h must be > 0");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) fail("epsilon must be > 0");
  if (!(alpha >= 0.0 && alpha <= 1.0)) fail("alpha must lie in [0, 1]");
  if (!(p0 > 0.0) || !std::isfinite(p0)) fail("p0 must be > 0");
  if (!(sigma_s > 0.0) || !std::isfinite(sigma_s)) fail("sigma_s must be > 0");
  if (!(sigma_r >= 0.0) || !std::isfinite(sigma_r)) fail("sigma_r must be >= 0");
}

PixelModel PixelModel::reset(const Color& feature, double p0) {
  PixelModel m;
  m.P = Eigen::Matrix4d::Identity() * p0;
  for (int c = 0; c < 3; ++c) {
    m.beta[static_cast<std::size_t>(c)] = Eigen::Vector4d::Unit(1 + c);
  }
  m.z = feature;
  m.valid = false;
  return m;
}

DenoiserState::DenoiserState(int width, int height)
    : width_(width), height_(height), pixels_(static_cast<std::size_t>(width) * height) {
  if (width < 0 || height < 0) throw std::invalid_argument("DenoiserState: negative dimensions");
}

DenoiserState reproject_state(const DenoiserState& prev, const MotionField& motion, const ImageRGB& current,
                              const DenoiserParams& params, DenoiserStats* stats) {
  const int width = current.width();
  const int height = current.height();
  if (!motion.velocity.same_dims(width, height)) {
    throw std::invalid_argument("reproject_state: motion field and frame dims differ");
  }
  DenoiserState next(width, height);
  next.set_version(prev.version());
  const bool have_history = prev.width() == width && prev.height() == height && !prev.empty();
  std::atomic<std::uint64_t> resets{0};

  parallel_for(0, height, [&](int y) {
    std::uint64_t row_resets = 0;
    for (int x = 0; x < width; ++x) {
      PixelModel& dst = next(x, y);
      bool fetched = false;
      if (have_history) {
        int qx = x, qy = y;
        bool usable = motion.valid(x, y) != 0 || motion.camera_static;
        if (motion.valid(x, y)) {
          const Eigen::Vector2f& v = motion.velocity(x, y);
          qx = static_cast<int>(std::lround(static_cast<double>(x) + v.x()));
          qy = static_cast<int>(std::lround(static_cast<double>(y) + v.y()));
        }
        if (usable && prev.in_bounds(qx, qy) && prev(qx, qy).valid) {
          dst = prev(qx, qy);
          fetched = true;
        }
      }
      if (!fetched) {
        dst = PixelModel::reset(current(x, y).cast<double>(), params.p0);
        ++row_resets;
      }
    }
    resets.fetch_add(row_resets, std::memory_order_relaxed);
  });
  if (stats) stats->reset_pixels = resets.load();
  return next;
}

Image<Color> update_temporal_feature(const DenoiserState& reprojected, const ImageRGB& current, double alpha) {
  const int width = current.width();
  const int height = current.height();
  if (reprojected.width() != width || reprojected.height() != height) {
    throw std::invalid_argument("update_temporal_feature: state and frame dims differ");
  }
  Image<Color> z(width, height);
  parallel_for(0, height, [&](int y) {
    for (int x = 0; x < width; ++x) {
      Color lo = Color::Constant(std::numeric_limits<double>::infinity());
      Color hi = -lo;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (!current.in_bounds(x + dx, y + dy)) continue;
          const Color c = current(x + dx, y + dy).cast<double>();
          lo = lo.min(c);
          hi = hi.max(c);
        }
      }
      const Color history = reprojected(x, y).z.max(lo).min(hi);
      z(x, y) = alpha * history + (1.0 - alpha) * current(x, y).cast<double>();
    }
  });
  return z;
}

double compute_sample_weight(const Color& estimate, const Color& feature, double h, double epsilon) {
  const double ni = estimate.matrix().norm();
  const double nz = feature.matrix().norm();
  const double d = (estimate - feature).matrix().norm() / (std::min(ni, nz) + epsilon);
  const double w = std::exp(-(d * d) / (h * h));
  return std::max(w, std::numeric_limits<double>::min());
}

namespace {

bool apply_gain(PixelModel& model, const Predictor& p, const Eigen::Vector4d& Pp, double denom, const Color& estimate,
                double lambda, double p0) {
  const Eigen::Vector4d gain = Pp / denom;
  std::array<Eigen::Vector4d, 3> beta = model.beta;
  for (int c = 0; c < 3; ++c) {
    auto& b = beta[static_cast<std::size_t>(c)];
    const double residual = estimate[c] - p.dot(b);
    b += gain * residual;
  }
  Eigen::Matrix4d P = (model.P - gain * (p.transpose() * model.P)) / lambda;
  P = 0.5 * (P + P.transpose()).eval();
  const bool finite = P.allFinite() && beta[0].allFinite() && beta[1].allFinite() && beta[2].allFinite();
  if (!finite) {
    model = PixelModel::reset(model.z, p0);
    model.valid = true;
    return false;
  }
  model.beta = beta;
  model.P = P;
  model.valid = true;
  return true;
}

}  // namespace

bool wrls_update_pixel(PixelModel& model, const Color& estimate, double weight, double lambda, double p0) {
  const Predictor p = make_predictor(model.z);
  const Eigen::Vector4d Pp = model.P * p;
  const double denom = lambda / weight + p.dot(Pp);
  return apply_gain(model, p, Pp, denom, estimate, lambda, p0);
}

bool rls_update_pixel(PixelModel& model, const Color& estimate, double lambda, double p0) {
  const Predictor p = make_predictor(model.z);
  const Eigen::Vector4d Pp = model.P * p;
  const double denom = lambda + p.dot(Pp);
  return apply_gain(model, p, Pp, denom, estimate, lambda, p0);
}

Color temporal_predict(const PixelModel& model) {
  const Predictor p = make_predictor(model.z);
  return Color(p.dot(model.beta[0]), p.dot(model.beta[1]), p.dot(model.beta[2]));
}

ImageRGB spatial_filter(const DenoiserState& state, const DenoiserParams& params) {
  const int width = state.width();
  const int height = state.height();
  constexpr int kRadius = 2;
  double spatial[2 * kRadius + 1][2 * kRadius + 1];
  for (int dy = -kRadius; dy <= kRadius; ++dy) {
    for (int dx = -kRadius; dx <= kRadius; ++dx) {
      spatial[dy + kRadius][dx + kRadius] =
          std::exp(-static_cast<double>(dx * dx + dy * dy) / (2.0 * params.sigma_s * params.sigma_s));
    }
  }

  ImageRGB out(width, height);
  parallel_for(0, height, [&](int y) {
    for (int x = 0; x < width; ++x) {
      const PixelModel& center = state(x, y);
      const Predictor p = make_predictor(center.z);
      const double zn = center.z.matrix().norm() + params.epsilon;
      const double range_denom = 2.0 * params.sigma_r * params.sigma_r * zn * zn;
      Color acc = Color::Zero();
      double wsum = 0.0;
      for (int dy = -kRadius; dy <= kRadius; ++dy) {
        for (int dx = -kRadius; dx <= kRadius; ++dx) {
          if (!state.in_bounds(x + dx, y + dy)) continue;
          const PixelModel& nb = state(x + dx, y + dy);
          const double dz2 = (center.z - nb.z).matrix().squaredNorm();
          double range;
          if (range_denom > 0.0) {
            range = std::exp(-dz2 / range_denom);
          } else {
            range = dz2 == 0.0 ? 1.0 : 0.0;
          }
          const double b = spatial[dy + kRadius][dx + kRadius] * range;
          if (b == 0.0) continue;
          acc += b * Color(p.dot(nb.beta[0]), p.dot(nb.beta[1]), p.dot(nb.beta[2]));
          wsum += b;
        }
      }
      out(x, y) = (acc / wsum).max(0.0).cast<float>();
    }
  });
  return out;
}

DenoiseResult denoise_frame(const DenoiserState& state, const ImageRGB& frame, const MotionField& motion,
                            const DenoiserParams& params) {
  params.validate();
  DenoiseResult r;
  r.state = reproject_state(state, motion, frame, params, &r.stats);
  const Image<Color> z = update_temporal_feature(r.state, frame, params.alpha);

  const int width = frame.width();
  const int height = frame.height();
  r.temporal = ImageRGB(width, height);
  r.weights = ImageGray(width, height);
  std::atomic<std::uint64_t> nonfinite{0};
  parallel_for(0, height, [&](int y) {
    std::uint64_t bad = 0;
    for (int x = 0; x < width; ++x) {
      PixelModel& m = r.state(x, y);
      m.z = z(x, y);
      const Color estimate = frame(x, y).cast<double>();
      const double w = compute_sample_weight(estimate, m.z, params.h, params.epsilon);
      if (!wrls_update_pixel(m, estimate, w, params.lambda, params.p0)) ++bad;
      r.weights(x, y) = static_cast<float>(w);
      r.temporal(x, y) = temporal_predict(m).max(0.0).cast<float>();
    }
    nonfinite.fetch_add(bad, std::memory_order_relaxed);
  });
  r.stats.nonfinite_resets = nonfinite.load();
  r.image = spatial_filter(r.state, params);
  return r;
}

Denoiser::Denoiser(DenoiserParams params) : params_(params) { params_.validate(); }

void Denoiser::reset(int width, int height) {
  state_ = DenoiserState(width, height);
  state_.set_version(next_version_++);
}

DenoiseResult Denoiser::process(const ImageRGB& frame, const MotionField& motion) {
  if (state_.width() != frame.width() || state_.height() != frame.height()) reset(frame.width(), frame.height());
  DenoiseResult r = denoise_frame(state_, frame, motion, params_);
  state_ = std::move(r.state);
  r.state = DenoiserState();
  last_stats_ = r.stats;
  return r;
}

void write_denoiser_debug(const std::filesystem::path& dir, const DenoiserState& state, const ImageGray& weights) {
  std::filesystem::create_directories(dir);
  const int width = state.width();
  const int height = state.height();
  ImageRGB z(width, height);
  for (std::size_t i = 0; i < state.size(); ++i) z[i] = state[i].z.cast<float>();
  write_pfm(dir / "feature_z.pfm", z);
  static const char* kChannel[3] = {"x", "y", "z"};
  for (int c = 0; c < 3; ++c) {
    ImageGray intercept(width, height);
    ImageRGB slopes(width, height);
    for (std::size_t i = 0; i < state.size(); ++i) {
      const Eigen::Vector4d& b = state[i].beta[static_cast<std::size_t>(c)];
      intercept[i] = static_cast<float>(b[0]);
      slopes[i] = Colorf(static_cast<float>(b[1]), static_cast<float>(b[2]), static_cast<float>(b[3]));
    }
    write_pfm(dir / (std::string("beta_") + kChannel[c] + "_intercept.pfm"), intercept);
    write_pfm(dir / (std::string("beta_") + kChannel[c] + "_feature.pfm"), slopes);
  }
  write_pfm(dir / "weights.pfm", weights);
}

}  // namespace vptdn
