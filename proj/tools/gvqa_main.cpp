// SPDX-License-Identifier: Apache-2.0
#include "gvqa/cli.hpp"

int main(int argc, char** argv) {
    return gvqa::cli::main(argc, argv);
}
