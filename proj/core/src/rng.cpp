// Copyright (c) 2026 mds contributors
// SPDX-License-Identifier: Apache-2.0
#include "mds/rng.hpp"

#include <sstream>

#include "mds/error.hpp"

namespace mds {

std::string Rng::serialize() const {
  std::ostringstream os;
  os << engine_;
  return os.str();
}

void Rng::deserialize(const std::string& text) {
  std::istringstream is(text);
  is >> engine_;
  check_data(!is.fail(), "rng: malformed serialized engine state");
}

}  // namespace mds
