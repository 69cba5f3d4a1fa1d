// Copyright (c) 2026 mds contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mds/corpus.hpp"
#include "mds/features.hpp"
#include "mds/streams.hpp"

namespace mds {

/// Per-segment dissimilarities and their mean (the clip's MDS).
struct ClipScore {
  std::vector<double> per_segment_d;
  double mds = 0.0;
};

/// Evaluation-mode scoring of one clip with trained streams.
ClipScore score_clip(Stream& visual, Stream& audio, const ClipRecord& clip,
                     const FeatureConfig& fcfg, const VisualStats* stats = nullptr);

/// Threshold = midpoint of the class-mean MDS values over (mds, label) pairs.
/// Sets *degenerate when the class means coincide.
double calibrate_threshold(const std::vector<std::pair<double, int>>& train_scores,
                           bool* degenerate = nullptr);

/// Fake (1) iff mds >= tau; ties classify as fake.
int classify(double mds, double tau);

/// Width-3 median filter (endpoints copied). Optional smoothing for localize.
std::vector<double> median_filter3(const std::vector<double>& values);

/// Labels each segment fake iff d_t >= tau_seg, merges adjacent equal labels
/// into spans covering [0, n*segment_s] exactly.
std::vector<SpanLabel> localize(const std::vector<double>& per_segment_d, double tau_seg,
                                double segment_s, bool median_filter = false);

/// Full per-clip scoring artifact.
struct ScoreReport {
  std::string clip_id;
  std::vector<double> per_segment_d;
  double mds = 0.0;
  double tau = 0.0;
  int predicted_label = 0;
  std::vector<SpanLabel> spans;
};

ScoreReport make_score_report(const std::string& clip_id, const ClipScore& score, double tau,
                              std::optional<double> tau_seg, double segment_s,
                              bool median_filter = false);

nlohmann::json report_to_json(const ScoreReport& report);
ScoreReport report_from_json(const nlohmann::json& j);

/// Dissimilarity curve colored by decision, threshold line, optional truth
/// shading. One image per clip.
void write_localization_svg(const ScoreReport& report, double segment_s,
                            const std::vector<SpanLabel>& truth,
                            const std::filesystem::path& path);

}  // namespace mds
