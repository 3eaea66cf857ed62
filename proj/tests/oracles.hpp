// Copyright 2026 The vptdn Authors
// SPDX-License-Identifier: Apache-2.0

// Reference computations the tests compare the engine against. None of these
// call into the code under test beyond plain data types.

#pragma once

#include "vptdn/renderer.hpp"

#include <Eigen/Dense>

#include "vptdn/camera.hpp"

#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace vptdn::testing {

std::filesystem::path data_dir();

/// Asymptotic Kolmogorov-Smirnov p-value of `samples` against `cdf`.
double ks_pvalue(std::vector<double> samples, const std::function<double(double)>& cdf);

/// Two-sided chord of a ray through an axis-aligned box, clipped to t >= 0.
double box_chord(const Vec3& origin, const Vec3& dir, const Vec3& lo, const Vec3& hi);

/// Filter-weighted average of f(u, v) over the reconstruction footprint of
/// pixel (px, py): separable Gaussian sigma 0.5 truncated at one pixel,
/// clipped to the image, midpoint rule with `n` nodes per half pixel.
Color filtered_pixel(int width, int height, int px, int py, int n, const std::function<Color(double, double)>& f);

/// Film position (u, v) in pixel units to a world ray, pinhole convention.
Ray film_ray(const Vec3& position, const Vec3& target, const Vec3& up, double fov_y, int width, int height, double u,
             double v);

/// Box of constant scalar 1 with extinction mu, given albedo and emission.
Scene constant_box_scene(const Vec3& half_extent, double mu, const Color& albedo, const Color& emission,
                         int max_bounces);

/// The single-scattering sphere described in data/single_scatter.json with
/// its precomputed quadrature image.
struct SingleScatterCase {
  Scene scene;
  Camera camera;
  std::vector<Color> expected;  // row-major
};
SingleScatterCase load_single_scatter();

/// One weighted least squares problem with exponential forgetting.
struct RegressionSequence {
  std::vector<Eigen::Vector4d> p;
  std::vector<Eigen::Vector3d> y;
  std::vector<double> w;
};

RegressionSequence random_sequence(std::mt19937_64& rng, int length, bool unit_weights);

/// Solves (lambda^T / p0 I + sum lambda^(T-k) w_k p_k p_k^T) B =
/// sum lambda^(T-k) w_k p_k y_k^T densely in long double.
Eigen::Matrix<double, 4, 3> batch_wls(const RegressionSequence& seq, double lambda, double p0,
                                      const Eigen::Matrix<double, 4, 3>& beta0);

/// Largest |a - b| / max(|b|, floor) over all entries.
double max_relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double floor);

}  // namespace vptdn::testing
