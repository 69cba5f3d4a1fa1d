// Copyright (c) 2026 mds contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mds/rng.hpp"
#include "mds/tensor.hpp"

namespace mds {

/// Labeled time span inside a clip. Label: 0 = real, 1 = fake.
struct SpanLabel {
  double start_s = 0.0;
  double end_s = 0.0;
  int label = 0;
};

/// One labeled audio-visual clip held in memory.
/// frames: (3, F, H, W), RGB in [0,1]. waveform: mono samples in [-1,1].
struct ClipRecord {
  std::string clip_id;
  Tensor frames;
  int fps = 0;
  std::vector<double> waveform;
  int sample_rate = 0;
  int label = 0;  // 0 = real, 1 = fake
  std::vector<SpanLabel> span_truth;  // present for spliced clips

  std::int64_t frame_count() const { return frames.rank() == 4 ? frames.dim(1) : 0; }
  double duration_s() const { return static_cast<double>(frame_count()) / fps; }
};

/// Throws DataError when a ClipRecord violates its invariants
/// (duration agreement, value ranges, span coverage).
void validate_clip(const ClipRecord& clip);

struct ManifestEntry {
  std::string clip_id;
  std::string frames_path;  // directory of frame_%06d.ppm, or a packed .npy tensor
  std::string audio_path;   // mono PCM wav
  int fps = 0;
  int sample_rate = 0;
  int label = 0;
  std::vector<SpanLabel> span_truth;
};

struct CorpusManifest {
  int version = 1;
  std::vector<ManifestEntry> clips;
  std::map<std::string, std::string> split;  // clip_id -> train|val|test
  std::filesystem::path root;                // directory of the manifest file; not serialized

  const ManifestEntry& entry(const std::string& clip_id) const;
  std::vector<std::string> ids_in_split(const std::string& split_name) const;
};

CorpusManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const CorpusManifest& manifest, const std::filesystem::path& path);

/// Loads frames + waveform for one manifest entry and validates the clip.
ClipRecord load_clip(const CorpusManifest& manifest, const std::string& clip_id);

/// Writes the clip's data under dir (frames as .npy or a ppm directory plus a
/// wav file) and returns the manifest entry with paths relative to root.
ManifestEntry write_clip_data(const ClipRecord& clip, const std::filesystem::path& root,
                              const std::filesystem::path& dir, bool frames_as_npy = true);

enum class FakeMode { audio_swap, audio_shift, splice };

FakeMode parse_fake_mode(const std::string& name);
std::string to_string(FakeMode mode);

/// Configuration for the synthetic correlated audio-visual corpus.
struct SynthConfig {
  int n_real = 100;
  int n_fake = 100;
  double duration_s = 4.0;
  int fps = 8;
  int sample_rate = 16000;
  int frame_h = 32;
  int frame_w = 32;
  std::vector<FakeMode> fake_modes = {FakeMode::audio_swap};
  double shift_min_s = 0.5;    // realized audio_shift offset (circular)
  double noise_level = 0.02;   // relative amplitude of the additive latent/audio noise
  double artifact_level = 0.03;  // rendering fingerprint stamped on regenerated fake mouths
  std::uint64_t seed = 0;
};

/// Throws UsageError on invalid configuration.
void validate_synth_config(const SynthConfig& cfg);

/// Generates n_real + n_fake clips. Real clips render one latent signal as a
/// mouth aperture in the frames and as the amplitude envelope of a tone in
/// the waveform; fake clips break that correlation per fake_mode.
/// Deterministic for a fixed config (clip i depends only on (seed, i)).
std::vector<ClipRecord> generate_synthetic_corpus(const SynthConfig& cfg);

/// Replaces frames and audio of `real` with those of `fake` inside `spans`
/// (seconds). Output span_truth covers the full duration with both labels.
ClipRecord splice_clips(const ClipRecord& real, const ClipRecord& fake,
                        const std::vector<std::pair<double, double>>& spans);

/// Mouth-mask pixel count per frame, normalized by frame height. Proxy for
/// the rendered mouth aperture; thresholds on the renderer's mouth color.
std::vector<double> aperture_series(const ClipRecord& clip);

}  // namespace mds
