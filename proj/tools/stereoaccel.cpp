// Copyright 2026 The stereoaccel Authors
// SPDX-License-Identifier: Apache-2.0

#include "stereoaccel/cli_main.hpp"

int main(int argc, char** argv) { return stereoaccel::cli::run(argc, argv); }
