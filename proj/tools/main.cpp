// Copyright 2026 The vptdn Authors
// SPDX-License-Identifier: Apache-2.0

#include "vptdn/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return vptdn::run_command(argc, argv, std::cout, std::cerr); }
