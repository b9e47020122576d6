// SPDX-License-Identifier: Apache-2.0
#include "minagent/cli.hpp"

int main(int argc, char** argv) { return minagent::run_cli(argc, argv); }
