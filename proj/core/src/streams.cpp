// Copyright (c) 2026 mds contributors
// SPDX-License-Identifier: Apache-2.0
#include "mds/streams.hpp"

#include <cmath>

#include "mds/error.hpp"

namespace mds {

namespace {

const char* kind_name(StreamKind k) { return k == StreamKind::visual ? "visual" : "audio"; }

/// Per-item input as fed to the conv stack: audio (n_mfcc, T) rides as a
/// one-channel map (1, 1, n_mfcc, T).
nn::Shape normalized_input(const StreamConfig& cfg) {
  if (cfg.kind == StreamKind::visual) {
    check_usage(cfg.input_shape.size() == 4 && cfg.input_shape[0] == 3,
                "stream: visual input_shape must be (3,T,H,W)");
    return cfg.input_shape;
  }
  check_usage(cfg.input_shape.size() == 2, "stream: audio input_shape must be (n_mfcc,T_steps)");
  return {1, 1, cfg.input_shape[0], cfg.input_shape[1]};
}

std::array<int, 3> pool_stride_of(const ConvBlockSpec& b) {
  std::array<int, 3> s = b.pool_stride;
  for (int d = 0; d < 3; ++d)
    if (s[d] == 0) s[d] = b.pool[d];
  return s;
}

bool has_pool(const ConvBlockSpec& b) {
  return b.pool[0] > 1 || b.pool[1] > 1 || b.pool[2] > 1;
}

nn::Shape conv_out(const nn::Shape& in, const ConvBlockSpec& b, const std::string& where) {
  nn::Shape out{b.out_channels, 0, 0, 0};
  for (int d = 0; d < 3; ++d) {
    const std::int64_t padded = in[static_cast<std::size_t>(d) + 1] + 2 * b.pad[d] - b.kernel[d];
    check_usage(padded >= 0, "stream: " + where + ": kernel does not fit input " +
                                 std::to_string(in[static_cast<std::size_t>(d) + 1]) + " on axis " +
                                 std::to_string(d));
    out[static_cast<std::size_t>(d) + 1] = padded / b.stride[d] + 1;
  }
  return out;
}

nn::Shape pool_out(const nn::Shape& in, const ConvBlockSpec& b, const std::string& where) {
  const auto s = pool_stride_of(b);
  nn::Shape out{in[0], 0, 0, 0};
  for (int d = 0; d < 3; ++d) {
    const std::int64_t span = in[static_cast<std::size_t>(d) + 1] - b.pool[d];
    check_usage(span >= 0, "stream: " + where + ": pool does not fit input on axis " +
                               std::to_string(d));
    out[static_cast<std::size_t>(d) + 1] = span / s[d] + 1;
  }
  return out;
}

}  // namespace

std::vector<nn::Shape> infer_stream_shapes(const StreamConfig& cfg) {
  check_usage(!cfg.conv_spec.empty(), "stream: conv_spec must not be empty");
  check_usage(cfg.embed_dim >= 1 && cfg.fc_hidden >= 1, "stream: fc widths must be >= 1");
  std::vector<nn::Shape> shapes;
  nn::Shape s = normalized_input(cfg);
  shapes.push_back(s);
  std::int64_t in_ch = s[0];
  for (std::size_t i = 0; i < cfg.conv_spec.size(); ++i) {
    const auto& b = cfg.conv_spec[i];
    const std::string where =
        std::string(kind_name(cfg.kind)) + "/block" + std::to_string(i + 1);
    check_usage(b.out_channels >= 1, "stream: " + where + ": out_channels must be >= 1");
    nn::Shape cin = s;
    cin[0] = in_ch;
    s = conv_out(cin, b, where);
    shapes.push_back(s);
    if (has_pool(b)) {
      s = pool_out(s, b, where);
      shapes.push_back(s);
    }
    in_ch = b.out_channels;
  }
  switch (cfg.tail) {
    case StreamTail::global_avg_pool: s = {s[0]}; break;
    case StreamTail::temporal_avg_flatten: s = {s[0] * s[2] * s[3]}; break;
    case StreamTail::flatten: s = {s[0] * s[1] * s[2] * s[3]}; break;
  }
  shapes.push_back(s);
  shapes.push_back({cfg.fc_hidden});
  shapes.push_back({cfg.embed_dim});
  return shapes;
}

std::int64_t stream_param_count(const StreamConfig& cfg) {
  const auto shapes = infer_stream_shapes(cfg);
  std::int64_t count = 0;
  std::int64_t in_ch = shapes[0][0];
  for (const auto& b : cfg.conv_spec) {
    count += b.out_channels * in_ch * b.kernel[0] * b.kernel[1] * b.kernel[2];  // conv weight
    count += 2 * b.out_channels;                                               // bn gamma/beta
    in_ch = b.out_channels;
  }
  const std::int64_t feat = shapes[shapes.size() - 3][0];
  count += cfg.fc_hidden * feat;      // fc7 (no bias, bn follows)
  count += 2 * cfg.fc_hidden;         // bn7
  count += cfg.embed_dim * cfg.fc_hidden + cfg.embed_dim;  // fc8 + bias
  count += 2 * cfg.embed_dim;         // head bn8
  count += 2 * cfg.embed_dim + 2;     // head fc10 + bias
  return count;
}

StreamConfig desk_visual_config(int fps, int height, int width, int embed_dim) {
  StreamConfig cfg;
  cfg.kind = StreamKind::visual;
  cfg.input_shape = {3, fps, height, width};
  cfg.tail = StreamTail::global_avg_pool;
  cfg.fc_hidden = 2 * embed_dim;
  cfg.embed_dim = embed_dim;
  int t = fps;
  const std::int64_t chans[4] = {12, 24, 48, 64};
  for (int i = 0; i < 4; ++i) {
    ConvBlockSpec b;
    b.out_channels = chans[i];
    if (i < 3) {
      b.kernel = {3, 3, 3};
      b.pad = {1, 1, 1};
      const int pt = t >= 2 ? 2 : 1;
      b.pool = {pt, 2, 2};
      t /= pt;
    } else {
      b.kernel = {1, 3, 3};
      b.pad = {0, 1, 1};
      b.pool = {1, 1, 1};
    }
    cfg.conv_spec.push_back(b);
  }
  return cfg;
}

StreamConfig desk_audio_config(int n_mfcc, int t_steps, int embed_dim) {
  StreamConfig cfg;
  cfg.kind = StreamKind::audio;
  cfg.input_shape = {n_mfcc, t_steps};
  cfg.tail = StreamTail::global_avg_pool;
  cfg.fc_hidden = 2 * embed_dim;
  cfg.embed_dim = embed_dim;
  const std::int64_t chans[5] = {16, 32, 48, 64, 64};
  int h = n_mfcc, w = t_steps;
  for (int i = 0; i < 5; ++i) {
    ConvBlockSpec b;
    b.out_channels = chans[i];
    b.kernel = {1, 3, 3};
    b.pad = {0, 1, 1};
    if (i < 4) {
      const int ph = (i < 2 && h >= 2) ? 2 : 1;
      const int pw = w >= 2 ? 2 : 1;
      b.pool = {1, ph, pw};
      h /= ph;
      w /= pw;
    }
    cfg.conv_spec.push_back(b);
  }
  return cfg;
}

// Original-scale geometry. Strides/pool strides the source leaves
// unspecified are inferred so the published layer sizes come out exactly;
// intended for shape inference, not desk-scale training.
StreamConfig full_visual_config() {
  StreamConfig cfg;
  cfg.kind = StreamKind::visual;
  cfg.input_shape = {3, 30, 224, 224};
  cfg.tail = StreamTail::temporal_avg_flatten;  // average pool over time, keep 7x7
  cfg.fc_hidden = 4096;
  cfg.embed_dim = 1024;

  ConvBlockSpec b1;  // conv1
  b1.out_channels = 64;
  b1.kernel = {7, 7, 7};
  b1.stride = {1, 2, 2};
  b1.pad = {3, 3, 3};
  b1.pool = {1, 2, 2};
  cfg.conv_spec.push_back(b1);

  const std::int64_t chans[4] = {64, 128, 256, 256};  // conv2_x .. conv5_x
  for (int i = 0; i < 4; ++i) {
    ConvBlockSpec b;
    b.out_channels = chans[i];
    b.kernel = {3, 3, 3};
    b.pad = {1, 1, 1};
    b.pool = i < 3 ? std::array<int, 3>{2, 2, 2} : std::array<int, 3>{1, 1, 1};
    cfg.conv_spec.push_back(b);
  }
  return cfg;
}

StreamConfig full_audio_config() {
  StreamConfig cfg;
  cfg.kind = StreamKind::audio;
  cfg.input_shape = {13, 99};  // 20 ms window / 10 ms hop over one second
  cfg.tail = StreamTail::flatten;
  cfg.fc_hidden = 4096;
  cfg.embed_dim = 1024;

  auto block = [](std::int64_t ch, std::array<int, 3> kernel, std::array<int, 3> pad,
                  std::array<int, 3> pool, std::array<int, 3> pool_stride) {
    ConvBlockSpec b;
    b.out_channels = ch;
    b.kernel = kernel;
    b.pad = pad;
    b.pool = pool;
    b.pool_stride = pool_stride;
    return b;
  };
  // conv_1 (pool_1 is 1x1: identity), conv_2 + pool_2, conv_3..conv_5 + pool_5, conv_6.
  cfg.conv_spec.push_back(block(64, {1, 3, 3}, {0, 1, 1}, {1, 1, 1}, {0, 0, 0}));
  cfg.conv_spec.push_back(block(192, {1, 3, 3}, {0, 1, 1}, {1, 3, 3}, {1, 1, 2}));
  cfg.conv_spec.push_back(block(384, {1, 3, 3}, {0, 1, 1}, {1, 1, 1}, {0, 0, 0}));
  cfg.conv_spec.push_back(block(256, {1, 3, 3}, {0, 1, 1}, {1, 1, 1}, {0, 0, 0}));
  cfg.conv_spec.push_back(block(256, {1, 3, 3}, {0, 1, 1}, {1, 3, 3}, {1, 2, 2}));
  cfg.conv_spec.push_back(block(512, {1, 5, 4}, {0, 0, 0}, {1, 1, 1}, {0, 0, 0}));
  return cfg;
}

Stream::Stream(StreamConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
  const auto shapes = infer_stream_shapes(cfg_);  // validates before allocation
  const std::string prefix = kind_name(cfg_.kind);
  const nn::Shape in = normalized_input(cfg_);

  std::int64_t in_ch = in[0];
  for (std::size_t i = 0; i < cfg_.conv_spec.size(); ++i) {
    const auto& b = cfg_.conv_spec[i];
    const std::string base = prefix + "/block" + std::to_string(i + 1);
    trunk_.add(std::make_unique<nn::Conv3d>(base + "/conv", in_ch, b.out_channels, b.kernel,
                                            b.stride, b.pad));
    trunk_.add(std::make_unique<nn::BatchNorm>(base + "/bn", b.out_channels));
    trunk_.add(std::make_unique<nn::ReLU>(base + "/relu"));
    if (has_pool(b))
      trunk_.add(std::make_unique<nn::MaxPool3d>(base + "/pool", b.pool, pool_stride_of(b)));
    in_ch = b.out_channels;
  }
  switch (cfg_.tail) {
    case StreamTail::global_avg_pool:
      trunk_.add(std::make_unique<nn::GlobalAvgPool>(prefix + "/gap"));
      break;
    case StreamTail::temporal_avg_flatten:
      trunk_.add(std::make_unique<nn::TemporalAvgFlatten>(prefix + "/tavg"));
      break;
    case StreamTail::flatten:
      trunk_.add(std::make_unique<nn::Flatten>(prefix + "/flatten"));
      break;
  }
  const std::int64_t feat = shapes[shapes.size() - 3][0];
  trunk_.add(std::make_unique<nn::Linear>(prefix + "/fc7", feat, cfg_.fc_hidden, /*bias=*/false));
  trunk_.add(std::make_unique<nn::BatchNorm>(prefix + "/bn7", cfg_.fc_hidden));
  trunk_.add(std::make_unique<nn::ReLU>(prefix + "/relu7"));
  trunk_.add(std::make_unique<nn::Linear>(prefix + "/fc8", cfg_.fc_hidden, cfg_.embed_dim));

  head_.add(std::make_unique<nn::BatchNorm>(prefix + "/bn8", cfg_.embed_dim));
  head_.add(std::make_unique<nn::Dropout>(prefix + "/dropout", cfg_.dropout_p));
  head_.add(std::make_unique<nn::Linear>(prefix + "/fc10", cfg_.embed_dim, 2));

  Rng rng(Rng::derive(seed, cfg_.kind == StreamKind::visual ? 1 : 2));
  trunk_.init(rng);
  head_.init(rng);
}

Stream::Output Stream::forward(const Tensor& batch, bool train, Rng* dropout_rng) {
  nn::Ctx ctx{train, dropout_rng};
  Output out;
  out.embed = trunk_.forward(batch, ctx);
  embed_cache_ = out.embed;
  out.logits = head_.forward(out.embed, ctx);
  return out;
}

void Stream::backward(const Tensor& d_embed, const Tensor& d_logits) {
  Tensor de = head_.backward(d_logits);
  check_usage(de.same_shape(d_embed), "stream: embedding gradient shape mismatch");
  for (std::int64_t i = 0; i < de.size(); ++i) de[i] += d_embed[i];
  trunk_.backward(de);
}

std::vector<nn::Param*> Stream::params() {
  auto p = trunk_.params();
  for (auto* hp : head_.params()) p.push_back(hp);
  return p;
}

std::vector<nn::Buffer*> Stream::buffers() {
  auto b = trunk_.buffers();
  for (auto* hb : head_.buffers()) b.push_back(hb);
  return b;
}

void Stream::zero_grads() {
  for (auto* p : params()) std::fill(p->grad.storage().begin(), p->grad.storage().end(), 0.0);
}

std::int64_t Stream::param_count() { return nn::param_count(params()); }

std::uint64_t Stream::activation_signature() const {
  return trunk_.activation_signature() * 0x100000001b3ull ^ head_.activation_signature();
}

Tensor to_batch(const std::vector<const Tensor*>& items, StreamKind kind) {
  check_usage(!items.empty(), "stream: empty batch");
  const Tensor& first = *items[0];
  nn::Shape item_shape;
  if (kind == StreamKind::visual) {
    check_usage(first.rank() == 4 && first.dim(0) == 3, "stream: visual items must be (3,T,H,W)");
    item_shape = first.shape();
  } else {
    check_usage(first.rank() == 2, "stream: audio items must be (n_mfcc,T_steps)");
    item_shape = {1, 1, first.dim(0), first.dim(1)};
  }
  nn::Shape batch_shape = item_shape;
  batch_shape.insert(batch_shape.begin(), static_cast<std::int64_t>(items.size()));
  Tensor batch(batch_shape);
  const std::int64_t item_size = first.size();
  for (std::size_t b = 0; b < items.size(); ++b) {
    check_usage(items[b]->shape() == first.shape(), "stream: inconsistent item shapes in batch");
    std::copy(items[b]->data(), items[b]->data() + item_size, batch.data() + b * item_size);
  }
  return batch;
}

std::vector<double> fake_probabilities(const Tensor& logits) {
  check_usage(logits.rank() == 2 && logits.dim(1) == 2, "stream: logits must be (B,2)");
  std::vector<double> out(static_cast<std::size_t>(logits.dim(0)));
  for (std::int64_t b = 0; b < logits.dim(0); ++b) {
    const double l0 = logits.at2(b, 0), l1 = logits.at2(b, 1);
    const double m = std::max(l0, l1);
    const double e0 = std::exp(l0 - m), e1 = std::exp(l1 - m);
    out[static_cast<std::size_t>(b)] = e1 / (e0 + e1);
  }
  return out;
}

std::unique_ptr<Stream> build_stream(const StreamConfig& cfg, std::uint64_t seed) {
  return std::make_unique<Stream>(cfg, seed);
}

EmbeddingPair forward_pair(Stream& visual, Stream& audio, const SegmentPair& seg,
                           const FeatureConfig& fcfg, int fps, const VisualStats* stats) {
  check_usage(visual.config().embed_dim == audio.config().embed_dim,
              "streams: visual and audio embedding dimensions differ (" +
                  std::to_string(visual.config().embed_dim) + " vs " +
                  std::to_string(audio.config().embed_dim) + ")");
  const Tensor vis = prepare_visual(seg.visual, fcfg, fps, stats);
  const Tensor vb = to_batch({&vis}, StreamKind::visual);
  const Tensor ab = to_batch({&seg.audio_mfcc}, StreamKind::audio);

  auto vo = visual.forward(vb, /*train=*/false);
  auto ao = audio.forward(ab, /*train=*/false);

  EmbeddingPair pair;
  const auto e = visual.config().embed_dim;
  pair.f_v.assign(vo.embed.data(), vo.embed.data() + e);
  pair.f_a.assign(ao.embed.data(), ao.embed.data() + e);
  pair.p_v = fake_probabilities(vo.logits)[0];
  pair.p_a = fake_probabilities(ao.logits)[0];
  return pair;
}

}  // namespace mds
