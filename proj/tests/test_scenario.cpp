// Copyright 2026 The vptdn Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "vptdn/manifest.hpp"
#include "vptdn/parallel.hpp"
#include "vptdn/rng.hpp"
#include "vptdn/scenario.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <string>

using namespace vptdn;

namespace {

nlohmann::json minimal_doc() {
  return nlohmann::json::parse(R"({
    "name": "mini",
    "volume": {"kind": "sphere", "dims": [16, 16, 16], "radius": 0.4},
    "frames": 3,
    "width": 16,
    "height": 12,
    "spp": 1,
    "seed": 7,
    "reference_spp": 1,
    "tracks": {
      "camera": [
        {"frame": 0, "position": [0, 0.2, 2.5], "target": [0, 0, 0]},
        {"frame": 2, "position": [0.6, 0.2, 2.4], "target": [0, 0, 0]}
      ],
      "lights": [
        {"type": "point", "keys": [{"frame": 0, "position": [1, 1, 1], "intensity": [5, 5, 5]}]},
        {"type": "environment", "keys": [{"frame": 0, "radiance": [0.1, 0.1, 0.1]}]}
      ],
      "transfer_function": [
        {"frame": 0, "density_scale": 4, "points": [
          {"x": 0, "albedo": [0.8, 0.8, 0.8], "opacity": 0},
          {"x": 1, "albedo": [0.8, 0.8, 0.8], "opacity": 1}]}
      ]
    }
  })");
}

Scenario minimal() { return parse_scenario(minimal_doc().dump()); }

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("vptdn_scenario_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

std::string error_of(const nlohmann::json& doc) {
  try {
    parse_scenario(doc.dump());
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("parse and round trip") {
  const Scenario s = minimal();
  CHECK(s.name == "mini");
  CHECK(s.frames == 3);
  CHECK(s.width == 16);
  CHECK(s.height == 12);
  CHECK(s.camera.size() == 2);
  CHECK(s.lights.size() == 2);
  CHECK(s.lights[1].kind == LightKind::kEnvironment);
  CHECK(s.max_bounces == 4);

  const Scenario back = parse_scenario(serialize_scenario(s));
  CHECK(back == s);
  CHECK(reference_key(back) == reference_key(s));
}

TEST_CASE("reference key ignores spp, denoiser and name") {
  const Scenario s = minimal();
  Scenario t = s;
  t.spp = 9;
  t.name = "other";
  t.denoiser.h = 3;
  CHECK(reference_key(t) == reference_key(s));
  t.seed = 8;
  CHECK(reference_key(t) != reference_key(s));
  Scenario u = s;
  u.reference_spp = 2;
  CHECK(reference_key(u) != reference_key(s));
}

TEST_CASE("validation errors name the field") {
  {
    auto doc = minimal_doc();
    std::swap(doc["tracks"]["camera"][0], doc["tracks"]["camera"][1]);
    const std::string msg = error_of(doc);
    CHECK(msg.find("camera") != std::string::npos);
  }
  {
    auto doc = minimal_doc();
    doc["spp_typo"] = 3;
    const std::string msg = error_of(doc);
    CHECK(msg.find("spp_typo") != std::string::npos);
  }
  {
    auto doc = minimal_doc();
    doc["tracks"]["camera"][1]["fov"] = 30;
    const std::string msg = error_of(doc);
    CHECK(msg.find("/tracks/camera/1") != std::string::npos);
  }
  {
    auto doc = minimal_doc();
    doc["width"] = 0;
    CHECK(error_of(doc).find("width") != std::string::npos);
  }
  {
    auto doc = minimal_doc();
    doc.erase("seed");
    CHECK(error_of(doc).find("seed") != std::string::npos);
  }
  {
    auto doc = minimal_doc();
    doc["tracks"]["transfer_function"][0]["density_scale"] = -1;
    CHECK(error_of(doc).find("transfer_function") != std::string::npos);
  }
  CHECK(!error_of(nlohmann::json::object()).empty());
  CHECK_THROWS(parse_scenario("{ not json"));
}

TEST_CASE("track interpolation") {
  auto doc = minimal_doc();
  doc["frames"] = 11;
  doc["tracks"]["camera"] = nlohmann::json::parse(R"([
    {"frame": 0, "position": [0, 0, 3], "target": [0, 0, 0]},
    {"frame": 10, "position": [2, 0, 3], "target": [2, 0, 0]}])");
  doc["tracks"]["lights"][0]["keys"] = nlohmann::json::parse(R"([
    {"frame": 0, "position": [0, 0, 0], "intensity": [1, 1, 1]},
    {"frame": 10, "position": [2, 0, 0], "intensity": [3, 3, 3]}])");
  const Scenario s = parse_scenario(doc.dump());

  CHECK(camera_at_frame(s, 0).position().isApprox(Vec3(0, 0, 3)));
  CHECK(camera_at_frame(s, 5).position().isApprox(Vec3(1, 0, 3)));
  CHECK(camera_at_frame(s, 10).position().isApprox(Vec3(2, 0, 3)));

  const ScenarioAssets assets = load_assets(s);
  const FrameScene mid = scene_at_frame(s, 5, assets);
  const FrameScene first = scene_at_frame(s, 0, assets);
  const FrameScene last = scene_at_frame(s, 10, assets);
  REQUIRE(mid.scene.lights.points.size() == 1);
  CHECK(mid.scene.lights.points[0].position.isApprox(Vec3(1, 0, 0)));
  // Colors are linear in the keys, so the midpoint intensity is the mean.
  const Color expected = 0.5 * (first.scene.lights.points[0].intensity + last.scene.lights.points[0].intensity);
  CHECK(mid.scene.lights.points[0].intensity.isApprox(expected));

  // A single-key track is constant.
  CHECK(first.scene.tf == last.scene.tf);
  CHECK(first.scene.lights.environment.radiance.isApprox(last.scene.lights.environment.radiance));
}

TEST_CASE("builtin scenarios") {
  const auto all = builtin_scenarios();
  CHECK(all.size() == 5);
  for (const Scenario& s : all) {
    CAPTURE(s.name);
    CHECK_NOTHROW(s.validate());
    CHECK(builtin_scenario(s.name).has_value());
    CHECK(parse_scenario(serialize_scenario(s)) == s);
  }
  CHECK(!builtin_scenario("nope").has_value());

  const Scenario orbit = *builtin_scenario("camera-orbit");
  CHECK(!camera_at_frame(orbit, 0).position().isApprox(camera_at_frame(orbit, 30).position()));

  const Scenario stat = *builtin_scenario("static-flicker");
  const ScenarioAssets stat_assets = load_assets(stat);
  const FrameScene s0 = scene_at_frame(stat, 0, stat_assets);
  for (int t = 1; t < stat.frames; t += 7) {
    const FrameScene st = scene_at_frame(stat, t, stat_assets);
    CHECK(st.camera.view_projection() == s0.camera.view_projection());
    CHECK(st.scene.tf == s0.scene.tf);
  }

  const Scenario tf = *builtin_scenario("tf-edit");
  const ScenarioAssets tf_assets = load_assets(tf);
  const FrameScene a = scene_at_frame(tf, 0, tf_assets);
  const FrameScene b = scene_at_frame(tf, tf.frames - 1, tf_assets);
  CHECK(!(a.scene.tf == b.scene.tf));
  CHECK(a.camera.view_projection() == b.camera.view_projection());
}

TEST_CASE("noisy run matches the renderer") {
  const Scenario s = minimal();
  RunOptions opt;
  opt.write_outputs = false;
  const RunResult r = run_scenario(s, RunMode::kNoisy, opt);
  REQUIRE(r.frames.size() == 3);
  const ScenarioAssets assets = load_assets(s);
  for (int t = 0; t < 3; ++t) {
    const FrameScene fs = scene_at_frame(s, t, assets);
    const FrameEstimate direct =
        render_frame(fs.scene, fs.camera, s.spp, frame_seed(s.seed, t), static_cast<std::uint32_t>(t));
    CHECK(r.frames[t] == direct.radiance);
    CHECK(r.frame_seeds[t] == frame_seed(s.seed, t));
  }
}

TEST_CASE("runs are deterministic across worker counts") {
  const Scenario s = minimal();
  RunOptions opt;
  opt.write_outputs = false;
  const int saved = worker_count();
  set_worker_count(1);
  const RunResult one = run_scenario(s, RunMode::kDenoised, opt);
  set_worker_count(4);
  const RunResult four = run_scenario(s, RunMode::kDenoised, opt);
  set_worker_count(saved);
  CHECK(one.hashes == four.hashes);
  CHECK(sequence_hash(one.hashes) == sequence_hash(four.hashes));
}

TEST_CASE("reference at the noisy spp equals the noisy run") {
  Scenario s = minimal();
  s.reference_spp = s.spp;
  RunOptions opt;
  opt.write_outputs = false;
  const RunResult noisy = run_scenario(s, RunMode::kNoisy, opt);
  const RunResult ref = run_scenario(s, RunMode::kReference, opt);
  CHECK(noisy.hashes == ref.hashes);
}

TEST_CASE("outputs, manifest and reference reuse") {
  const Scenario s = minimal();
  RunOptions opt;
  opt.out_root = scratch("outputs");

  const RunResult ref = run_scenario(s, RunMode::kReference, opt);
  CHECK(!ref.reused_reference);
  CHECK(std::filesystem::exists(opt.out_root / "mini" / "reference" / "manifest.json"));
  const RunResult again = run_scenario(s, RunMode::kReference, opt);
  CHECK(again.reused_reference);
  CHECK(again.hashes == ref.hashes);
  REQUIRE(load_reference(reference_dir(opt, s), s).has_value());

  // A different scene must not pick up the cached frames.
  Scenario other = s;
  other.seed = 99;
  CHECK(!load_reference(reference_dir(opt, s), other).has_value());

  const RunResult noisy = run_scenario(s, RunMode::kNoisy, opt);
  const auto noisy_dir = opt.out_root / "mini" / "noisy";
  CHECK(std::filesystem::exists(frame_path(noisy_dir, 2, ".pfm")));
  CHECK(std::filesystem::exists(frame_path(noisy_dir, 2, "_pos.pfm")));
  CHECK(std::filesystem::exists(frame_path(noisy_dir, 2, "_mask.pgm")));

  const RunResult dn = run_scenario(s, RunMode::kDenoised, opt);
  REQUIRE(dn.report.has_value());
  CHECK(dn.report->frames.size() == 3);
  CHECK(std::filesystem::exists(opt.out_root / "mini" / "denoised" / "report.csv"));

  std::ifstream in(opt.out_root / "mini" / "denoised" / "manifest.json");
  const nlohmann::json m = nlohmann::json::parse(in);
  CHECK(m["mode"] == "denoised");
  CHECK(m["seeds"]["scenario"] == 7);
  CHECK(m["seeds"]["frames"].size() == 3);
  CHECK(m["hashes"].size() == 3);
  CHECK(m["timings"]["denoise_ms"].size() == 3);
  for (const auto& v : m["timings"]["denoise_ms"]) CHECK(v.get<double>() > 0.0);
  CHECK(m.contains("metrics"));
  CHECK(parse_scenario(m["config"].dump()) == s);

  // Identical runs agree on everything but the timings.
  const RunResult dn2 = run_scenario(s, RunMode::kDenoised, opt);
  nlohmann::json a = make_run_manifest("run", s, dn), b = make_run_manifest("run", s, dn2);
  a.erase("timings");
  b.erase("timings");
  CHECK(a == b);

  // Replaying the stored noisy frames reproduces the end-to-end output.
  RunOptions replay_opt = opt;
  replay_opt.write_outputs = false;
  const RunResult replay = replay_denoiser(s, noisy_dir, replay_opt);
  CHECK(replay.hashes == dn.hashes);

  RunOptions strict = opt;
  strict.write_outputs = false;
  strict.require_reference = true;
  strict.reference_dir = scratch("missing");
  CHECK_THROWS_AS(run_scenario(s, RunMode::kDenoised, strict), ScenarioError);
  CHECK_THROWS_AS(replay_denoiser(s, scratch("empty"), replay_opt), ScenarioError);
  std::filesystem::remove_all(opt.out_root);
}

TEST_CASE("load_scenario names the file") {
  const auto dir = scratch("load");
  std::filesystem::create_directories(dir);
  auto doc = minimal_doc();
  doc.erase("name");
  std::ofstream(dir / "orbit-test.json") << doc.dump();
  CHECK(load_scenario(dir / "orbit-test.json").name == "orbit-test");
  std::ofstream(dir / "broken.json") << "{";
  try {
    load_scenario(dir / "broken.json");
    FAIL("expected an error");
  } catch (const ScenarioError& e) {
    CHECK(std::string(e.what()).find("broken.json") != std::string::npos);
  }
  CHECK_THROWS_AS(load_scenario(dir / "absent.json"), ScenarioError);
  std::filesystem::remove_all(dir);
}
