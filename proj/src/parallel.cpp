// Copyright 2026 The vptdn Authors
// SPDX-License-Identifier: Apache-2.0

#include "vptdn/parallel.hpp"

#include <cstdlib>
#include <string>

namespace vptdn {
namespace {

std::atomic<int> g_override{0};

int env_worker_count() {
  if (const char* env = std::getenv("VPTDN_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

int worker_count() {
  const int o = g_override.load(std::memory_order_relaxed);
  return o > 0 ? o : env_worker_count();
}

void set_worker_count(int n) { g_override.store(n > 0 ? n : 0, std::memory_order_relaxed); }

}  // namespace vptdn
