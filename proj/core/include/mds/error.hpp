// Copyright (c) 2026 mds contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace mds {

/// Invalid arguments or flags supplied by the caller / command line.
struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed or inconsistent data on disk (manifests, clips, checkpoints).
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure: non-finite losses or gradients, degenerate inputs.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

inline void check_usage(bool cond, const std::string& msg) {
  if (!cond) throw UsageError(msg);
}
inline void check_data(bool cond, const std::string& msg) {
  if (!cond) throw DataError(msg);
}
inline void check_numeric(bool cond, const std::string& msg) {
  if (!cond) throw NumericError(msg);
}

}  // namespace mds
