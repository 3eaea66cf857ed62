// Copyright 2026 The vptdn Authors
// SPDX-License-Identifier: Apache-2.0

#include "vptdn/manifest.hpp"

#include "vptdn/parallel.hpp"

#include <fstream>
#include <numeric>

namespace vptdn {
namespace {

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

std::uint64_t sequence_hash(const std::vector<std::uint64_t>& frame_hashes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::uint64_t f : frame_hashes) {
    for (int b = 0; b < 8; ++b) {
      h ^= (f >> (8 * b)) & 0xffu;
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

nlohmann::json make_run_manifest(const std::string& command, const Scenario& scenario, const RunResult& result) {
  nlohmann::json hashes = nlohmann::json::object();
  for (std::size_t t = 0; t < result.hashes.size(); ++t) {
    char key[32];
    std::snprintf(key, sizeof(key), "frame_%04zu", t);
    hashes[key] = hash_hex(result.hashes[t]);
  }
  nlohmann::json seeds = nlohmann::json::array();
  for (std::uint64_t s : result.frame_seeds) seeds.push_back(s);

  nlohmann::json m;
  m["command"] = command;
  m["mode"] = to_string(result.mode);
  m["config"] = to_json(scenario);
  m["reference_key"] = hash_hex(reference_key(scenario));
  m["seeds"] = {{"scenario", scenario.seed}, {"frames", std::move(seeds)}};
  m["hashes"] = std::move(hashes);
  m["sequence_hash"] = hash_hex(sequence_hash(result.hashes));
  m["diagnostics"] = {{"discarded_samples", result.discarded_samples},
                      {"reset_pixels", result.reset_pixels},
                      {"nonfinite_resets", result.nonfinite_resets}};
  m["timings"] = {{"workers", worker_count()},
                  {"render_ms", result.render_ms},
                  {"denoise_ms", result.denoise_ms},
                  {"mean_render_ms", mean(result.render_ms)},
                  {"mean_denoise_ms", mean(result.denoise_ms)}};
  if (result.report) {
    m["metrics"] = {{"mean_psnr_input", result.report->mean_psnr_input()},
                    {"mean_psnr_denoised", result.report->mean_psnr_denoised()},
                    {"mean_ssim_input", result.report->mean_ssim_input()},
                    {"mean_ssim_denoised", result.report->mean_ssim_denoised()},
                    {"flicker_input", result.report->flicker_input},
                    {"flicker_denoised", result.report->flicker_denoised}};
  }
  return m;
}

void emit_run_manifest(const std::filesystem::path& path, const nlohmann::json& manifest) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << manifest.dump(2) << "\n";
}

}  // namespace vptdn
