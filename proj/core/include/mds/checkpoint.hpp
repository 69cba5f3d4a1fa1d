// Copyright (c) 2026 mds contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mds/features.hpp"
#include "mds/streams.hpp"
#include "mds/trainer_config.hpp"

namespace mds {

/// Versioned training container: config snapshot (and its hash), parameter
/// and optimizer blobs, batch-norm buffers, RNG state and progress counters.
struct CheckpointData {
  std::uint64_t config_hash = 0;
  std::string config_json;  // {"features":..,"visual":..,"audio":..,"objective":..,"train":..}
  int epoch = 0;
  std::int64_t step = 0;
  std::int64_t adam_t = 0;
  double best_val_auc = -1.0;
  std::string rng_state;
  bool has_visual_stats = false;
  VisualStats visual_stats;
  // Keys: "param/<name>", "adam_m/<name>", "adam_v/<name>", "buffer/<name>".
  std::map<std::string, std::vector<double>> blobs;
};

void save_checkpoint(const CheckpointData& ckpt, const std::filesystem::path& path);

/// Loads and verifies container magic, version and config-hash integrity.
CheckpointData load_checkpoint(const std::filesystem::path& path);

/// A trained model rebuilt from a checkpoint: configs plus both streams with
/// parameters and batch-norm buffers restored.
struct ModelBundle {
  FeatureConfig features;
  ObjectiveConfig objective;
  TrainConfig train;
  StreamConfig visual_cfg, audio_cfg;
  std::unique_ptr<Stream> visual, audio;
  bool has_visual_stats = false;
  VisualStats visual_stats;
  std::uint64_t config_hash = 0;
};

ModelBundle load_model(const std::filesystem::path& checkpoint_path);

/// Copies stream parameters/buffers into blob maps and back.
void store_stream_blobs(Stream& stream, CheckpointData& ckpt);
void restore_stream_blobs(Stream& stream, const CheckpointData& ckpt);

}  // namespace mds
