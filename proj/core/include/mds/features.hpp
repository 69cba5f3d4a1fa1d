// Copyright (c) 2026 mds contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mds/corpus.hpp"
#include "mds/tensor.hpp"

namespace mds {

/// Audio/visual featurization parameters.
///
/// MFCC chain (fixed contract, every column a pure function of its window):
///   frame at k*hop  ->  per-frame pre-emphasis (0.97, first sample edge-
///   replicated)  ->  Hann window  ->  zero-pad to n_fft  ->  magnitude
///   spectrum  ->  triangular mel filterbank (HTK mel scale, fmin..fmax)
///   ->  natural log with floor 1e-10  ->  orthonormal DCT-II, first n_mfcc
///   coefficients kept.
struct FeatureConfig {
  double segment_s = 1.0;  // D
  int n_mfcc = 13;
  double win_len_s = 0.025;
  double hop_s = 0.010;
  int n_fft = 0;      // 0 = next power of two >= window samples
  double fmin = 0.0;
  double fmax = 0.0;  // 0 = Nyquist
  enum class VisualNorm { none, per_channel_standardize };
  VisualNorm normalize_visual = VisualNorm::none;
};

void validate_feature_config(const FeatureConfig& cfg);

/// Aligned D-second pair of visual frames and audio MFCC map.
struct SegmentPair {
  std::string clip_id;
  int index = 0;      // 0-based segment index t
  Tensor visual;      // (3, D*fps, H, W)
  Tensor audio_mfcc;  // (n_mfcc, T_steps)
  int label = 0;
};

constexpr double kLogFloor = 1e-10;
constexpr double kPreEmphasis = 0.97;

/// MFCC heat-map of a waveform: (n_mfcc, T) with
/// T = floor((len - win) / hop) + 1.
Tensor compute_mfcc(std::span<const double> waveform, int sample_rate, const FeatureConfig& cfg);

class FeatureCache;

/// Splits a clip into floor(duration/D) aligned segment pairs; the trailing
/// remainder is dropped. Segment t covers [tD, (t+1)D) in both modalities.
/// For clips with span_truth, a segment is labeled fake iff fake spans cover
/// more than half of it. Requires integer D*fps and D*sample_rate.
/// A cache, when given, is consulted for the MFCC maps and filled on miss.
std::vector<SegmentPair> segment_clip(const ClipRecord& clip, const FeatureConfig& cfg,
                                      const FeatureCache* cache = nullptr);

/// Per-channel statistics of the train split, used when
/// normalize_visual == per_channel_standardize.
struct VisualStats {
  double mean[3] = {0, 0, 0};
  double stddev[3] = {1, 1, 1};
};

VisualStats compute_visual_stats(const std::vector<const Tensor*>& frame_tensors);

/// Normalizes a (3, D*fps, H, W) segment tensor per FeatureConfig. Identity
/// when normalization is off. stats must be provided when standardizing.
Tensor prepare_visual(const Tensor& frames, const FeatureConfig& cfg, int fps,
                      const VisualStats* stats = nullptr);

/// Optional on-disk cache of MFCC maps keyed by (clip_id, t, config hash).
class FeatureCache {
 public:
  FeatureCache() = default;
  FeatureCache(std::filesystem::path dir, std::uint64_t config_hash);

  bool enabled() const { return !dir_.empty(); }
  std::optional<Tensor> get(const std::string& clip_id, int t) const;
  void put(const std::string& clip_id, int t, const Tensor& mfcc) const;

 private:
  std::filesystem::path dir_;
  std::uint64_t config_hash_ = 0;
  std::filesystem::path key_path(const std::string& clip_id, int t) const;
};

}  // namespace mds
