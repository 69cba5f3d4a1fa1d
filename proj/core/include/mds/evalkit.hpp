// Copyright (c) 2026 mds contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mds/scoring.hpp"
#include "mds/trainer.hpp"

namespace mds {

/// Rank-based (Mann-Whitney) AUC; higher score must indicate fake. Ties
/// count one half. Throws UsageError on single-class input.
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

/// AUC with each video's score/label broadcast to its frames.
double frame_wise_auc(const std::vector<double>& scores, const std::vector<int>& labels,
                      const std::vector<std::int64_t>& frame_counts);

struct LocalizationMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
};

LocalizationMetrics metrics_from_counts(std::int64_t tp, std::int64_t fp, std::int64_t fn,
                                        std::int64_t tn);

/// Segment-level confusion at granularity segment_s between two span
/// partitions of the same duration (>50% fake overlap marks a segment fake).
LocalizationMetrics localization_metrics(const std::vector<SpanLabel>& spans_pred,
                                         const std::vector<SpanLabel>& span_truth,
                                         double segment_s);

struct EvalReport {
  double auc_video = 0.0;
  double auc_frame = 0.0;
  bool has_localization = false;
  LocalizationMetrics localization;
  double tau = 0.0;
  int n_scored = 0;
  std::vector<ScoreReport> reports;
};

/// Scores every clip of `split`, calibrates tau on the train split (unless
/// overridden) and aggregates video/frame AUC plus segment-level
/// localization metrics over clips that carry span_truth.
EvalReport evaluate_split(const CorpusManifest& manifest, Stream& visual, Stream& audio,
                          const FeatureConfig& fcfg, const VisualStats* stats,
                          const std::string& split, std::optional<double> tau_override = {},
                          bool median_filter = false);

nlohmann::json eval_report_to_json(const EvalReport& report);

// ---------------------------------------------------------------------------
// Ablation harness
// ---------------------------------------------------------------------------

struct AblationCell {
  std::string name;
  ObjectiveConfig objective;
  double auc_value = 0.0;
  bool failed = false;
  std::string error;
};

struct AblationReport {
  std::vector<AblationCell> cells;
  std::uint64_t seed = 0;
};

/// Trains one model per lambda triple with a shared seed and corpus, then
/// computes test-split AUC per cell. Configurations with lambda1 > 0 score
/// by MDS; single-stream configurations score by the maximum head
/// probability over segments. Failed cells are marked, not fatal.
AblationReport ablate(const std::vector<ClipRecord>& clips,
                      const std::map<std::string, std::string>& split,
                      const FeatureConfig& fcfg, const StreamConfig& visual_cfg,
                      const StreamConfig& audio_cfg, const TrainConfig& base,
                      const std::vector<std::array<double, 3>>& lambda_grid,
                      const std::filesystem::path& work_dir);

nlohmann::json ablation_report_to_json(const AblationReport& report);
std::string ablation_table(const AblationReport& report);

/// Histogram of MDS values per class with the threshold marked.
void write_mds_distribution_svg(const std::vector<std::pair<double, int>>& scores, double tau,
                                const std::filesystem::path& path);

}  // namespace mds
