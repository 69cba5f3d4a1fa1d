// Copyright (c) 2026 mds contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mds/checkpoint.hpp"
#include "mds/corpus.hpp"
#include "mds/features.hpp"
#include "mds/streams.hpp"
#include "mds/trainer_config.hpp"

namespace mds {

/// Featurized training material: segment pairs of the train split plus
/// per-clip segment groups of the validation split.
struct TrainData {
  struct ClipSegments {
    std::string clip_id;
    int label = 0;
    std::vector<SegmentPair> segments;
  };
  std::vector<SegmentPair> train_segments;
  std::vector<ClipSegments> val_clips;
  int fps = 0;
  bool has_visual_stats = false;
  VisualStats visual_stats;  // train-split statistics when standardizing
};

TrainData build_train_data(const CorpusManifest& manifest, const FeatureConfig& fcfg,
                           const FeatureCache* cache = nullptr);
TrainData build_train_data(const std::vector<ClipRecord>& clips,
                           const std::map<std::string, std::string>& split,
                           const FeatureConfig& fcfg);

struct TrainResult {
  int epochs_run = 0;
  std::int64_t steps = 0;
  double best_val_auc = -1.0;
  double first_epoch_loss = 0.0;
  double final_epoch_loss = 0.0;
  std::filesystem::path best_checkpoint;
  std::filesystem::path last_checkpoint;
  std::filesystem::path metrics_path;
};

/// Deterministic mini-batch training of both streams under the combined
/// objective. Segments are the batch unit, shuffled globally per epoch.
/// Fixed seed => bit-identical metrics log on one device. Checkpoints are
/// written at every epoch boundary (last.ckpt) and on validation improvement
/// (best.ckpt).
class Trainer {
 public:
  Trainer(const TrainData& data, FeatureConfig fcfg, StreamConfig visual_cfg,
          StreamConfig audio_cfg, TrainConfig tcfg, std::filesystem::path out_dir);

  TrainResult run();
  /// Continues a checkpointed run until the configured epoch count; the
  /// metric stream and final parameters match an uninterrupted run exactly.
  TrainResult run_from(const CheckpointData& ckpt);

  Stream& visual() { return *visual_; }
  Stream& audio() { return *audio_; }

 private:
  TrainResult train_epochs(int start_epoch);
  std::optional<double> validate();
  void adam_step();
  CheckpointData make_checkpoint(int epoch_done) const;
  void log_line(std::int64_t step, int epoch, const LossBreakdown& loss);

  const TrainData& data_;
  FeatureConfig fcfg_;
  StreamConfig vcfg_, acfg_;
  TrainConfig tcfg_;
  std::filesystem::path out_dir_;

  std::unique_ptr<Stream> visual_, audio_;
  bool use_visual_ = true, use_audio_ = true;
  std::vector<Tensor> adam_m_, adam_v_;
  std::int64_t adam_t_ = 0;
  Rng rng_;
  std::int64_t step_ = 0;
  double best_val_auc_ = -1.0;
  std::optional<double> last_val_auc_;
  std::string metrics_buffer_;
};

/// Loads the manifest's train/val splits, trains, writes metrics +
/// checkpoints under out_dir.
TrainResult train(const CorpusManifest& manifest, const FeatureConfig& fcfg,
                  const StreamConfig& visual_cfg, const StreamConfig& audio_cfg,
                  const TrainConfig& tcfg, const std::filesystem::path& out_dir,
                  const FeatureCache* cache = nullptr);

/// Resumes from a checkpoint (configs are taken from the checkpoint itself).
/// epochs_override, when given, replaces the checkpointed epoch target.
TrainResult resume(const CorpusManifest& manifest, const std::filesystem::path& checkpoint_path,
                   const std::filesystem::path& out_dir,
                   std::optional<int> epochs_override = std::nullopt);

}  // namespace mds
