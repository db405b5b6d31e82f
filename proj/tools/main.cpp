// SPDX-License-Identifier: Apache-2.0
#include "lineocr/cli.hpp"

int main(int argc, char** argv) { return lineocr::cli_dispatch(argc, argv); }
