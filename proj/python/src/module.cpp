// Copyright 2026 The vptdn Authors
// SPDX-License-Identifier: Apache-2.0

#include "vptdn/color.hpp"
#include "vptdn/denoiser.hpp"
#include "vptdn/manifest.hpp"
#include "vptdn/metrics.hpp"
#include "vptdn/parallel.hpp"
#include "vptdn/renderer.hpp"
#include "vptdn/scenario.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

namespace py = pybind11;
using namespace vptdn;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

/// (H, W, 3) float32 copy of an image.
FloatArray to_array(const ImageRGB& img) {
  FloatArray out({img.height(), img.width(), 3});
  float* dst = out.mutable_data();
  for (std::size_t i = 0; i < img.size(); ++i) {
    for (int c = 0; c < 3; ++c) dst[3 * i + c] = img[i][c];
  }
  return out;
}

ImageRGB from_array(const FloatArray& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw std::invalid_argument("expected an (H, W, 3) array");
  ImageRGB img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  const float* src = a.data();
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = Colorf(src[3 * i], src[3 * i + 1], src[3 * i + 2]);
  return img;
}

FloatArray stack(const std::vector<ImageRGB>& frames) {
  if (frames.empty()) return FloatArray(std::vector<py::ssize_t>{0, 0, 0, 3});
  const int w = frames.front().width(), h = frames.front().height();
  FloatArray out({static_cast<int>(frames.size()), h, w, 3});
  float* dst = out.mutable_data();
  for (const ImageRGB& f : frames) {
    const FloatArray one = to_array(f);
    std::memcpy(dst, one.data(), sizeof(float) * one.size());
    dst += one.size();
  }
  return out;
}

py::dict report_dict(const MetricReport& r) {
  py::list frames;
  for (const FrameMetrics& f : r.frames) {
    py::dict d;
    d["frame"] = f.frame;
    d["psnr_input"] = f.psnr_input;
    d["psnr_denoised"] = f.psnr_denoised;
    d["ssim_input"] = f.ssim_input;
    d["ssim_denoised"] = f.ssim_denoised;
    frames.append(d);
  }
  py::dict out;
  out["frames"] = frames;
  out["mean_psnr_input"] = r.mean_psnr_input();
  out["mean_psnr_denoised"] = r.mean_psnr_denoised();
  out["mean_ssim_input"] = r.mean_ssim_input();
  out["mean_ssim_denoised"] = r.mean_ssim_denoised();
  out["flicker_input"] = r.flicker_input;
  out["flicker_denoised"] = r.flicker_denoised;
  return out;
}

py::object json_to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

py::dict run(const Scenario& s, const std::string& mode, const std::optional<std::filesystem::path>& out_root,
             const std::optional<std::filesystem::path>& reference_dir) {
  RunOptions opt;
  opt.write_outputs = out_root.has_value();
  if (out_root) opt.out_root = *out_root;
  if (reference_dir) opt.reference_dir = *reference_dir;
  RunResult r;
  {
    py::gil_scoped_release release;
    r = run_scenario(s, run_mode_from_string(mode), opt);
  }
  py::dict out;
  out["mode"] = to_string(r.mode);
  out["frames"] = stack(r.frames);
  out["inputs"] = stack(r.inputs);
  std::vector<std::string> hashes;
  for (std::uint64_t h : r.hashes) hashes.push_back(hash_hex(h));
  out["hashes"] = hashes;
  out["sequence_hash"] = hash_hex(sequence_hash(r.hashes));
  out["render_ms"] = r.render_ms;
  out["denoise_ms"] = r.denoise_ms;
  out["report"] = r.report ? py::object(report_dict(*r.report)) : py::none();
  return out;
}

}  // namespace

PYBIND11_MODULE(_vptdn, m) {
  m.doc() = "Volumetric path tracing with a weighted recursive least squares temporal denoiser";

  py::register_exception<ScenarioError>(m, "ScenarioError", PyExc_ValueError);
  py::register_exception<MetricError>(m, "MetricError", PyExc_ValueError);

  py::class_<DenoiserParams>(m, "DenoiserParams")
      .def(py::init<>())
      .def_readwrite("lambda_", &DenoiserParams::lambda)
      .def_readwrite("h", &DenoiserParams::h)
      .def_readwrite("epsilon", &DenoiserParams::epsilon)
      .def_readwrite("alpha", &DenoiserParams::alpha)
      .def_readwrite("p0", &DenoiserParams::p0)
      .def_readwrite("sigma_s", &DenoiserParams::sigma_s)
      .def_readwrite("sigma_r", &DenoiserParams::sigma_r)
      .def("validate", &DenoiserParams::validate);

  py::class_<Scenario>(m, "Scenario")
      .def_readwrite("name", &Scenario::name)
      .def_readwrite("frames", &Scenario::frames)
      .def_readwrite("width", &Scenario::width)
      .def_readwrite("height", &Scenario::height)
      .def_readwrite("spp", &Scenario::spp)
      .def_readwrite("seed", &Scenario::seed)
      .def_readwrite("reference_spp", &Scenario::reference_spp)
      .def_readwrite("max_bounces", &Scenario::max_bounces)
      .def_readwrite("exposure", &Scenario::exposure)
      .def_readwrite("denoiser", &Scenario::denoiser)
      .def("validate", &Scenario::validate)
      .def("to_json", [](const Scenario& s) { return json_to_py(to_json(s)); })
      .def("__eq__", [](const Scenario& a, const Scenario& b) { return a == b; })
      .def("__repr__", [](const Scenario& s) {
        return "<Scenario '" + s.name + "' " + std::to_string(s.frames) + " frames " + std::to_string(s.width) + "x" +
               std::to_string(s.height) + ">";
      });

  m.def("parse_scenario", &parse_scenario, py::arg("text"), py::arg("base_dir") = std::filesystem::path());
  m.def("load_scenario", &load_scenario, py::arg("path"));
  m.def("serialize_scenario", &serialize_scenario);
  m.def("builtin_scenario", [](const std::string& name) {
    auto s = builtin_scenario(name);
    if (!s) throw py::key_error(name);
    return *s;
  });
  m.def("builtin_names", [] {
    std::vector<std::string> names;
    for (const Scenario& s : builtin_scenarios()) names.push_back(s.name);
    return names;
  });

  m.def("run", &run, py::arg("scenario"), py::arg("mode") = "noisy", py::arg("out_root") = py::none(),
        py::arg("reference_dir") = py::none(),
        "Runs a scenario in 'noisy', 'denoised' or 'reference' mode. Frames come back as a (T, H, W, 3) XYZ array; "
        "files are written only when out_root is given.");

  py::class_<Denoiser>(m, "Denoiser")
      .def(py::init<DenoiserParams>(), py::arg("params") = DenoiserParams())
      .def(
          "process",
          [](Denoiser& d, const FloatArray& frame) {
            const ImageRGB img = from_array(frame);
            ImageRGB out;
            {
              py::gil_scoped_release release;
              out = d.process(img, MotionField::zero(img.width(), img.height())).image;
            }
            return to_array(out);
          },
          py::arg("frame"), "Denoises one frame of a static view.")
      .def("reset", &Denoiser::reset)
      .def_property_readonly("version", [](const Denoiser& d) { return d.state().version(); });

  m.def("tone_map", [](const FloatArray& xyz, double exposure) { return to_array(tone_map(from_array(xyz), exposure)); },
        py::arg("xyz"), py::arg("exposure") = 1.0);
  m.def("psnr", [](const FloatArray& a, const FloatArray& b) { return psnr(from_array(a), from_array(b)); });
  m.def("ssim", [](const FloatArray& a, const FloatArray& b) { return ssim(from_array(a), from_array(b)); });
  m.def("flicker_score", [](const std::vector<FloatArray>& frames) {
    std::vector<ImageRGB> imgs;
    for (const FloatArray& f : frames) imgs.push_back(from_array(f));
    return flicker_score(imgs);
  });
  m.def("set_worker_count", &set_worker_count);
  m.def("worker_count", &worker_count);
}
