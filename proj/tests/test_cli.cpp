// Copyright 2026 The vptdn Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "vptdn/cli.hpp"
#include "vptdn/scenario.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace vptdn;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_command(args, out, err);
  return {code, out.str(), err.str()};
}

const char* kScenario = R"({
  "volume": {"kind": "sphere", "dims": [12, 12, 12], "radius": 0.4},
  "frames": 2, "width": 12, "height": 10, "spp": 1, "seed": 3, "reference_spp": 2,
  "tracks": {
    "camera": [{"frame": 0, "position": [0, 0, 2.5], "target": [0, 0, 0]}],
    "lights": [{"type": "point", "keys": [{"frame": 0, "position": [1, 1, 1], "intensity": [4, 4, 4]}]}],
    "transfer_function": [{"frame": 0, "density_scale": 3, "points": [
      {"x": 0, "albedo": [0.7, 0.7, 0.7], "opacity": 0},
      {"x": 1, "albedo": [0.7, 0.7, 0.7], "opacity": 1}]}]
  }
})";

struct Workspace {
  std::filesystem::path dir;
  std::filesystem::path scenario;
  std::filesystem::path out;

  explicit Workspace(const std::string& name)
      : dir(std::filesystem::temp_directory_path() / ("vptdn_cli_" + name)) {
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    scenario = dir / "s.json";
    out = dir / "out";
    std::ofstream(scenario) << kScenario;
  }
  ~Workspace() { std::filesystem::remove_all(dir); }
};

nlohmann::json config_line(const std::string& out) {
  const auto pos = out.find("config ");
  REQUIRE(pos != std::string::npos);
  const auto end = out.find('\n', pos);
  return nlohmann::json::parse(out.substr(pos + 7, end - pos - 7));
}

}  // namespace

TEST_CASE("argument errors exit with 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"render", "--no-such-flag"}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"render"}).code == 2);  // --scenario is required
  CHECK(run({"denoise", "-s", "camera-orbit", "--lambda", "1.5"}).code == 2);
  CHECK(run({"render", "-s", "camera-orbit", "--spp", "0"}).code == 2);
}

TEST_CASE("help exits with 0") {
  const Outcome o = run({"--help"});
  CHECK(o.code == 0);
  CHECK(o.out.find("render") != std::string::npos);
  CHECK(o.out.find("serve") != std::string::npos);
}

TEST_CASE("unknown scenario is a runtime error") {
  const Outcome o = run({"render", "-s", "no-such-scenario"});
  CHECK(o.code == 1);
  CHECK(o.err.find("no-such-scenario") != std::string::npos);
}

TEST_CASE("render writes the noisy sequence") {
  Workspace ws("render");
  const Outcome o = run({"render", "--scenario", ws.scenario.string(), "--spp", "2", "-o", ws.out.string()});
  REQUIRE(o.code == 0);
  const auto dir = ws.out / "s" / "noisy";
  for (int t = 0; t < 2; ++t) {
    CHECK(std::filesystem::exists(frame_path(dir, t, ".pfm")));
    CHECK(std::filesystem::exists(frame_path(dir, t, "_pos.pfm")));
  }
  std::ifstream in(dir / "manifest.json");
  const nlohmann::json m = nlohmann::json::parse(in);
  CHECK(m["config"]["spp"] == 2);
  CHECK(config_line(o.out)["scenario"]["spp"] == 2);
}

TEST_CASE("denoise echoes the resolved configuration") {
  Workspace ws("echo");
  const Outcome o = run({"denoise", "-s", ws.scenario.string(), "-o", ws.out.string(), "--h", "0.5", "--alpha",
                         "0.3", "--lambda", "0.9", "--threads", "1"});
  REQUIRE(o.code == 0);
  const nlohmann::json cfg = config_line(o.out);
  CHECK(cfg["command"] == "denoise");
  CHECK(cfg["workers"] == 1);
  CHECK(cfg["scenario"]["denoiser"]["h"] == 0.5);
  CHECK(cfg["scenario"]["denoiser"]["alpha"] == 0.3);
  CHECK(cfg["scenario"]["denoiser"]["lambda"] == 0.9);
  CHECK(std::filesystem::exists(frame_path(ws.out / "s" / "denoised", 1, ".pfm")));
}

TEST_CASE("eval without a reference names the missing path") {
  Workspace ws("eval_missing");
  REQUIRE(run({"render", "-s", ws.scenario.string(), "-o", ws.out.string()}).code == 0);
  const Outcome o = run({"eval", "-s", ws.scenario.string(), "-o", ws.out.string()});
  CHECK(o.code == 1);
  CHECK(o.err.find((ws.out / "s" / "reference").string()) != std::string::npos);
}

TEST_CASE("full pipeline and replay") {
  Workspace ws("pipeline");
  const std::string s = ws.scenario.string(), out = ws.out.string();
  REQUIRE(run({"reference", "-s", s, "-o", out}).code == 0);
  CHECK(run({"reference", "-s", s, "-o", out}).out.find("[cached]") != std::string::npos);
  REQUIRE(run({"render", "-s", s, "-o", out}).code == 0);

  const Outcome replay = run({"denoise", "-s", s, "-o", out});
  REQUIRE(replay.code == 0);
  CHECK(replay.out.find("psnr input") != std::string::npos);
  std::ifstream a(ws.out / "s" / "denoised" / "manifest.json");
  const std::string replay_hash = nlohmann::json::parse(a)["sequence_hash"];

  const Outcome e2e = run({"denoise", "-s", s, "-o", out, "--end-to-end"});
  REQUIRE(e2e.code == 0);
  std::ifstream b(ws.out / "s" / "denoised" / "manifest.json");
  CHECK(nlohmann::json::parse(b)["sequence_hash"] == replay_hash);

  const Outcome ev = run({"eval", "-s", s, "-o", out});
  REQUIRE(ev.code == 0);
  CHECK(std::filesystem::exists(ws.out / "s" / "eval" / "report.csv"));
  CHECK(std::filesystem::exists(frame_path(ws.out / "s" / "eval", 1, "_error.png")));

  const Outcome bad_from = run({"denoise", "-s", s, "-o", out, "--from", (ws.dir / "nothing").string()});
  CHECK(bad_from.code == 1);
  CHECK(bad_from.err.find("nothing") != std::string::npos);
}
