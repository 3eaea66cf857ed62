// Copyright 2026 The vptdn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vptdn {

/// Entry point of the vptdn tool. Returns 0 on success, 1 on a runtime
/// failure and 2 on bad arguments.
int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vptdn
