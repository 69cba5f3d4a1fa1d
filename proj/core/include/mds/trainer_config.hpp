// Copyright (c) 2026 mds contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "mds/objective.hpp"

namespace mds {

/// Mini-batch training schedule. Adam is the only optimizer.
struct TrainConfig {
  int epochs = 12;
  int batch_size = 16;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  ObjectiveConfig objective;
  int eval_every = 1;           // epochs between validation passes
  int early_stop_patience = 0;  // 0 disables early stopping
  bool class_weighting = false; // inverse-frequency CE weights
};

void validate_train_config(const TrainConfig& cfg);

}  // namespace mds
