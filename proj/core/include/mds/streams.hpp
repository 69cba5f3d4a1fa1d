// Copyright (c) 2026 mds contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "mds/features.hpp"
#include "mds/nn.hpp"

namespace mds {

enum class StreamKind { visual, audio };

/// One conv block: conv -> batch norm -> relu -> optional valid max pool.
/// 2-D (audio) blocks keep the temporal kernel/pool size at 1.
struct ConvBlockSpec {
  std::int64_t out_channels = 0;
  std::array<int, 3> kernel{3, 3, 3};
  std::array<int, 3> stride{1, 1, 1};
  std::array<int, 3> pad{1, 1, 1};
  std::array<int, 3> pool{1, 1, 1};         // 1,1,1 disables pooling
  std::array<int, 3> pool_stride{0, 0, 0};  // 0 = same as pool kernel
};

/// How the conv stack connects to the fully connected tail.
enum class StreamTail { global_avg_pool, temporal_avg_flatten, flatten };

struct StreamConfig {
  StreamKind kind = StreamKind::visual;
  std::vector<ConvBlockSpec> conv_spec;
  StreamTail tail = StreamTail::global_avg_pool;
  std::int64_t fc_hidden = 128;  // fc7 width
  std::int64_t embed_dim = 64;   // fc8 width: the embedding fed to the distance
  double dropout_p = 0.5;
  nn::Shape input_shape;  // per item: visual (3,T,H,W); audio (n_mfcc, T_steps)
};

/// Shipped presets. `desk` trains in CI; `full` mirrors the original-scale
/// geometry (strides/padding inferred where unspecified) and is intended for
/// shape checking, not desk training.
StreamConfig desk_visual_config(int fps = 8, int height = 32, int width = 32,
                                int embed_dim = 64);
StreamConfig desk_audio_config(int n_mfcc = 13, int t_steps = 98, int embed_dim = 64);
StreamConfig full_visual_config();
StreamConfig full_audio_config();

/// Static shape inference: returns every intermediate per-item shape starting
/// with the (normalized, 4-D) input. Throws naming the offending block.
std::vector<nn::Shape> infer_stream_shapes(const StreamConfig& cfg);

/// Analytic parameter count for a config (no allocation).
std::int64_t stream_param_count(const StreamConfig& cfg);

/// Segment embeddings and unimodal fake probabilities for one segment pair.
struct EmbeddingPair {
  std::vector<double> f_v;
  std::vector<double> f_a;
  double p_v = 0.5;  // probability of fake from the visual head
  double p_a = 0.5;  // probability of fake from the audio head
};

/// One encoder stream: conv trunk ending in the embedding layer (fc8), plus a
/// 2-logit classification head (batch norm -> dropout -> linear).
class Stream {
 public:
  Stream(StreamConfig cfg, std::uint64_t seed);

  struct Output {
    Tensor embed;   // (B, embed_dim)
    Tensor logits;  // (B, 2)
  };

  /// batch: (B, 3, T, H, W) for visual, (B, 1, 1, n_mfcc, T_steps) for audio.
  Output forward(const Tensor& batch, bool train, Rng* dropout_rng = nullptr);

  /// Backpropagates both heads' gradients; accumulates parameter gradients.
  /// d_embed: (B, embed_dim); d_logits: (B, 2).
  void backward(const Tensor& d_embed, const Tensor& d_logits);

  std::vector<nn::Param*> params();
  std::vector<nn::Buffer*> buffers();
  void zero_grads();
  std::int64_t param_count();
  /// Kink-detection hash of the last forward (see nn::Layer).
  std::uint64_t activation_signature() const;

  const StreamConfig& config() const { return cfg_; }

 private:
  StreamConfig cfg_;
  nn::Net trunk_;
  nn::Net head_;
  Tensor embed_cache_;
};

/// Normalizes a per-item input to the 5-D batch layout of Stream::forward.
Tensor to_batch(const std::vector<const Tensor*>& items, StreamKind kind);

/// (B,2) logits -> probability of fake (softmax component 1) per row.
std::vector<double> fake_probabilities(const Tensor& logits);

/// Builds a stream with deterministic initialization.
std::unique_ptr<Stream> build_stream(const StreamConfig& cfg, std::uint64_t seed);

/// Embeddings + head probabilities for one segment, evaluation mode
/// (dropout off, running batch-norm statistics). Streams must share
/// embed_dim; enforced here and at construction time.
EmbeddingPair forward_pair(Stream& visual, Stream& audio, const SegmentPair& seg,
                           const FeatureConfig& fcfg, int fps,
                           const VisualStats* stats = nullptr);

}  // namespace mds
