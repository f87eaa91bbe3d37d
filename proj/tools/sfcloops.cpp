// SPDX-License-Identifier: Apache-2.0

#include "sfcloops/commands.hpp"

#include <iostream>

int main(int argc, char** argv) { return sfcloops::cli::run_cli(argc, argv, std::cout, std::cerr); }
