# Copyright 2026 The vptdn Authors
# SPDX-License-Identifier: Apache-2.0
"""Volumetric path tracing with a weighted-RLS temporal denoiser."""

from ._vptdn import (
    Denoiser,
    DenoiserParams,
    MetricError,
    Scenario,
    ScenarioError,
    builtin_names,
    builtin_scenario,
    flicker_score,
    load_scenario,
    parse_scenario,
    psnr,
    run,
    serialize_scenario,
    set_worker_count,
    ssim,
    tone_map,
    worker_count,
)

__all__ = [
    "Denoiser",
    "DenoiserParams",
    "MetricError",
    "Scenario",
    "ScenarioError",
    "builtin_names",
    "builtin_scenario",
    "flicker_score",
    "load_scenario",
    "parse_scenario",
    "psnr",
    "run",
    "serialize_scenario",
    "set_worker_count",
    "ssim",
    "tone_map",
    "worker_count",
]
