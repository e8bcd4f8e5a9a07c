// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace gvqa::cli {

/// Entry point behind the gvqa executable; returns the process exit status
/// (0 ok, 2 config, 3 dataset, 4 backend, 5 retrieval, 1 anything else).
int main(int argc, const char* const* argv);

/// Same, with argv[0] supplied.
int run(const std::vector<std::string>& args);

}  // namespace gvqa::cli
