// Copyright 2026 The vptdn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vptdn/scenario.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

namespace vptdn {

/// Resolved configuration, seeds, per-stage timings and output hashes of
/// one run. Everything outside "timings" is a pure function of the inputs.
nlohmann::json make_run_manifest(const std::string& command, const Scenario& scenario, const RunResult& result);

void emit_run_manifest(const std::filesystem::path& path, const nlohmann::json& manifest);

/// FNV-1a over the per-frame hashes in order.
std::uint64_t sequence_hash(const std::vector<std::uint64_t>& frame_hashes);

}  // namespace vptdn
