// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "wavecnn/cli.hpp"

int main(int argc, char** argv) { return wavecnn::cli_dispatch(argc, argv, std::cout, std::cerr); }
