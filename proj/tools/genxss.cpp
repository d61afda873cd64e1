// Copyright 2026 The GenXSS Authors
// SPDX-License-Identifier: Apache-2.0

#include "genxss/cli.hpp"

int main(int argc, char **argv)
{
    return genxss::cli::run_cli(argc, argv);
}
