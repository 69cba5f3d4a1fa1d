// Copyright (c) 2026 mds contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace mds {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace mds
