// Copyright (c) 2026 mds contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace mds {

/// Entry point behind the `mds` binary. Returns the process exit code:
/// 0 success, 1 usage error, 2 data error, 3 numerical failure.
int run_cli(const std::vector<std::string>& args);

}  // namespace mds
