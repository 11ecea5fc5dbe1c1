// SPDX-License-Identifier: Apache-2.0
#include "graphogan/cli.hpp"

int main(int argc, char** argv) { return graphogan::cli::run_cli(argc, argv); }
