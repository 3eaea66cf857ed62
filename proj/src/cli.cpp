// Copyright 2026 The vptdn Authors
// SPDX-License-Identifier: Apache-2.0

#include "vptdn/cli.hpp"

#include "vptdn/manifest.hpp"
#include "vptdn/metrics.hpp"
#include "vptdn/parallel.hpp"
#include "vptdn/scenario.hpp"
#include "vptdn/service.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>

namespace vptdn {
namespace {

struct Overrides {
  std::optional<int> spp;
  std::optional<int> width;
  std::optional<int> height;
  std::optional<int> max_bounces;
  std::optional<double> lambda;
  std::optional<double> h;
  std::optional<double> alpha;
  std::optional<double> sigma_s;
  std::optional<double> sigma_r;
};

struct CommandConfig {
  std::string subcommand;
  std::string scenario;
  std::filesystem::path out = "out";
  std::filesystem::path reference;
  std::filesystem::path from;
  bool end_to_end = false;
  bool force = false;
  int threads = 0;
  int verbosity = 0;
  Overrides overrides;
  std::string address = "127.0.0.1";
  unsigned short port = 8080;
  std::filesystem::path static_dir;
  std::uint32_t max_frames = 0;
};

CLI::Validator open_unit_interval() {
  return CLI::Validator(
      [](std::string& s) -> std::string {
        const double v = std::stod(s);
        return v > 0.0 && v <= 1.0 ? "" : "must lie in (0, 1]";
      },
      "(0,1]");
}

CLI::Validator positive() {
  return CLI::Validator(
      [](std::string& s) -> std::string { return std::stod(s) > 0.0 ? "" : "must be > 0"; }, "> 0");
}

void add_scenario_options(CLI::App* cmd, CommandConfig& cfg, bool required) {
  auto* opt = cmd->add_option("-s,--scenario", cfg.scenario, "Scenario file or built-in name");
  if (required) opt->required();
  cmd->add_option("-o,--out", cfg.out, "Output root")->capture_default_str();
  cmd->add_option("--spp", cfg.overrides.spp, "Samples per pixel")->check(CLI::Range(1, 1 << 20));
  cmd->add_option("--width", cfg.overrides.width, "Image width")->check(CLI::Range(1, 65535));
  cmd->add_option("--height", cfg.overrides.height, "Image height")->check(CLI::Range(1, 65535));
  cmd->add_option("--max-bounces", cfg.overrides.max_bounces, "Scattering bounces per path")->check(CLI::Range(1, 1024));
  cmd->add_option("--lambda", cfg.overrides.lambda, "Forgetting factor")->check(open_unit_interval());
  cmd->add_option("--h", cfg.overrides.h, "Sample-weight bandwidth")->check(positive());
  cmd->add_option("--alpha", cfg.overrides.alpha, "History weight of the temporal feature")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--sigma-s", cfg.overrides.sigma_s, "Spatial blend sigma (pixels)")->check(positive());
  cmd->add_option("--sigma-r", cfg.overrides.sigma_r, "Spatial blend range sigma")->check(CLI::Range(0.0, 1e9));
  cmd->add_option("--threads", cfg.threads, "Worker threads (default: VPTDN_THREADS or all cores)")
      ->check(CLI::Range(0, 4096));
  cmd->add_flag("-v,--verbose", cfg.verbosity, "Per-frame progress on stderr");
}

Scenario resolve_scenario(const CommandConfig& cfg) {
  Scenario s;
  if (std::filesystem::exists(cfg.scenario)) {
    s = load_scenario(cfg.scenario);
  } else if (auto builtin = builtin_scenario(cfg.scenario)) {
    s = *builtin;
  } else {
    throw ScenarioError("scenario '" + cfg.scenario + "' is neither a file nor a built-in name");
  }
  const Overrides& o = cfg.overrides;
  if (o.spp) {
    if (cfg.subcommand == "reference") {
      s.reference_spp = *o.spp;
    } else {
      s.spp = *o.spp;
    }
  }
  if (o.width) s.width = *o.width;
  if (o.height) s.height = *o.height;
  if (o.max_bounces) s.max_bounces = *o.max_bounces;
  if (o.lambda) s.denoiser.lambda = *o.lambda;
  if (o.h) s.denoiser.h = *o.h;
  if (o.alpha) s.denoiser.alpha = *o.alpha;
  if (o.sigma_s) s.denoiser.sigma_s = *o.sigma_s;
  if (o.sigma_r) s.denoiser.sigma_r = *o.sigma_r;
  s.validate();
  return s;
}

void echo_config(std::ostream& out, const CommandConfig& cfg, const Scenario& s) {
  nlohmann::json j = {{"command", cfg.subcommand},
                      {"out", cfg.out.generic_string()},
                      {"workers", worker_count()},
                      {"scenario", to_json(s)}};
  out << "config " << j.dump() << "\n";
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

void print_report(std::ostream& out, const MetricReport& r) {
  char line[256];
  std::snprintf(line, sizeof(line),
                "psnr input %.3f dB denoised %.3f dB | ssim input %.4f denoised %.4f | flicker input %.3g "
                "denoised %.3g\n",
                r.mean_psnr_input(), r.mean_psnr_denoised(), r.mean_ssim_input(), r.mean_ssim_denoised(),
                r.flicker_input, r.flicker_denoised);
  out << line;
}

std::vector<ImageRGB> read_sequence(const std::filesystem::path& dir, int frames) {
  if (!std::filesystem::is_directory(dir)) throw IoError("missing directory " + dir.string());
  std::vector<ImageRGB> seq;
  for (int t = 0; t < frames; ++t) {
    const auto p = frame_path(dir, t, ".pfm");
    if (!std::filesystem::exists(p)) throw IoError("missing frame " + p.string());
    seq.push_back(read_pfm_rgb(p));
  }
  return seq;
}

int run_eval(const CommandConfig& cfg, const Scenario& s, std::ostream& out) {
  RunOptions opts;
  opts.out_root = cfg.out;
  opts.reference_dir = cfg.reference;
  const auto ref_dir = reference_dir(opts, s);
  if (!std::filesystem::is_directory(ref_dir)) throw IoError("missing reference directory " + ref_dir.string());
  const auto reference = read_sequence(ref_dir, s.frames);
  const auto noisy = read_sequence(mode_dir(opts, s, RunMode::kNoisy), s.frames);
  const auto denoised = read_sequence(mode_dir(opts, s, RunMode::kDenoised), s.frames);

  const MetricReport report = evaluate_sequences(noisy, denoised, reference, s.exposure);
  const auto eval_dir = cfg.out / s.name / "eval";
  std::filesystem::create_directories(eval_dir);
  report.write_csv(eval_dir / "report.csv");
  for (int t = 0; t < s.frames; ++t) {
    const auto i = static_cast<std::size_t>(t);
    const ImageGray err = error_map(tone_map(denoised[i], s.exposure), tone_map(reference[i], s.exposure));
    write_png(frame_path(eval_dir, t, "_error.png"), false_color(err, 0.25f));
  }
  print_report(out, report);
  out << "eval: wrote " << (eval_dir / "report.csv").generic_string() << "\n";
  return 0;
}

int dispatch(const CommandConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.threads > 0) set_worker_count(cfg.threads);

  if (cfg.subcommand == "serve") {
    ServeOptions so;
    so.scenario = cfg.scenario.empty() ? *builtin_scenario("static-flicker") : resolve_scenario(cfg);
    if (cfg.overrides.width) so.session.width = *cfg.overrides.width;
    if (cfg.overrides.height) so.session.height = *cfg.overrides.height;
    if (cfg.overrides.spp) so.session.spp = *cfg.overrides.spp;
    so.scenario.width = so.session.width;
    so.scenario.height = so.session.height;
    so.address = cfg.address;
    so.port = cfg.port;
    so.static_dir = cfg.static_dir;
    so.max_frames = cfg.max_frames;
    echo_config(out, cfg, so.scenario);
    serve(so);
    return 0;
  }

  const Scenario s = resolve_scenario(cfg);
  echo_config(out, cfg, s);
  if (cfg.subcommand == "eval") return run_eval(cfg, s, out);

  RunOptions opts;
  opts.out_root = cfg.out;
  opts.reference_dir = cfg.reference;
  opts.reuse_reference = !cfg.force;
  if (cfg.verbosity > 0) {
    opts.progress = [&err](int t, int n) { err << "frame " << (t + 1) << "/" << n << "\n"; };
  }

  RunResult result;
  if (cfg.subcommand == "render") {
    result = run_scenario(s, RunMode::kNoisy, opts);
  } else if (cfg.subcommand == "reference") {
    result = run_scenario(s, RunMode::kReference, opts);
  } else {
    const auto noisy_dir = cfg.from.empty() ? mode_dir(opts, s, RunMode::kNoisy) : cfg.from;
    const bool stored = std::filesystem::exists(frame_path(noisy_dir, 0, ".pfm"));
    if (!cfg.end_to_end && !cfg.from.empty() && !stored) {
      throw IoError("no noisy frames in " + noisy_dir.string());
    }
    result = (stored && !cfg.end_to_end) ? replay_denoiser(s, noisy_dir, opts)
                                         : run_scenario(s, RunMode::kDenoised, opts);
  }

  char line[256];
  std::snprintf(line, sizeof(line), "%s: %d frames -> %s (render %.1f ms/frame, denoise %.1f ms/frame)%s\n",
                cfg.subcommand.c_str(), s.frames, result.output_dir.generic_string().c_str(), mean(result.render_ms),
                mean(result.denoise_ms), result.reused_reference ? " [cached]" : "");
  out << line;
  if (result.report) print_report(out, *result.report);
  return 0;
}

}  // namespace

int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Volumetric path tracing with a weighted-RLS temporal denoiser", "vptdn"};
  app.require_subcommand(1);
  // -h is taken by the bandwidth flag --h, so help is long-form only.
  app.set_help_flag("--help", "Print this help message and exit");
  app.set_help_all_flag("--help-all", "Print help for every subcommand and exit");
  CommandConfig cfg;

  auto* render = app.add_subcommand("render", "Render the noisy sequence");
  add_scenario_options(render, cfg, true);

  auto* reference = app.add_subcommand("reference", "Render the high-spp reference sequence");
  add_scenario_options(reference, cfg, true);
  reference->add_option("--reference", cfg.reference, "Reference directory");
  reference->add_flag("--force", cfg.force, "Ignore a cached reference");

  auto* denoise = app.add_subcommand("denoise", "Denoise stored noisy frames, or render and denoise");
  add_scenario_options(denoise, cfg, true);
  denoise->add_option("--from", cfg.from, "Directory of stored noisy frames and first-collision buffers");
  denoise->add_flag("--end-to-end", cfg.end_to_end, "Render instead of reading stored frames");
  denoise->add_option("--reference", cfg.reference, "Reference directory for metrics");

  auto* eval = app.add_subcommand("eval", "Compare noisy and denoised sequences with a reference");
  add_scenario_options(eval, cfg, true);
  eval->add_option("--reference", cfg.reference, "Reference directory");

  auto* serve_cmd = app.add_subcommand("serve", "Run the live viewer service");
  add_scenario_options(serve_cmd, cfg, false);
  serve_cmd->add_option("--address", cfg.address, "Bind address")->capture_default_str();
  serve_cmd->add_option("--port", cfg.port, "TCP port (0 picks a free one)")->capture_default_str();
  serve_cmd->add_option("--static", cfg.static_dir, "Directory served over HTTP");
  serve_cmd->add_option("--max-frames", cfg.max_frames, "Close each session after this many frames");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }
  for (auto* sub : app.get_subcommands()) cfg.subcommand = sub->get_name();

  try {
    return dispatch(cfg, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"vptdn"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_command(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace vptdn
