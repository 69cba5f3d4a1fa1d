// Copyright (c) 2026 mds contributors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "mds/error.hpp"
#include "mds/evalkit.hpp"
#include "mds/objective.hpp"
#include "mds/streams.hpp"

using namespace mds;

namespace {

SegmentPair dummy_segment(Rng& rng, int t, int h, int w, int n_mfcc, int t_steps) {
  SegmentPair seg;
  seg.clip_id = "dummy";
  seg.visual = Tensor({3, t, h, w});
  for (std::int64_t i = 0; i < seg.visual.size(); ++i) seg.visual[i] = rng.uniform();
  seg.audio_mfcc = Tensor({n_mfcc, t_steps});
  for (std::int64_t i = 0; i < seg.audio_mfcc.size(); ++i) seg.audio_mfcc[i] = rng.normal();
  return seg;
}

}  // namespace

TEST_CASE("full-scale preset geometry reaches the published layer sizes") {
  const StreamConfig vis = full_visual_config();
  const auto vshapes = infer_stream_shapes(vis);
  // ... -> average pool over time -> 256x7x7 -> fc7 4096 -> fc8 1024
  CHECK(vshapes[vshapes.size() - 3] == nn::Shape{256 * 7 * 7});
  CHECK(vshapes[vshapes.size() - 2] == nn::Shape{4096});
  CHECK(vshapes.back() == nn::Shape{1024});
  CHECK(vis.embed_dim == 1024);

  const StreamConfig aud = full_audio_config();
  const auto ashapes = infer_stream_shapes(aud);
  // conv_6 output (512,1,21) flattens into fc7's 512x21 inputs.
  CHECK(ashapes[ashapes.size() - 4] == nn::Shape{512, 1, 1, 21});
  CHECK(ashapes[ashapes.size() - 3] == nn::Shape{512 * 21});
  CHECK(ashapes.back() == nn::Shape{1024});

  // Parameter counts are reported without allocating the full-scale model.
  CHECK(stream_param_count(vis) > 50'000'000);
  CHECK(stream_param_count(aud) > 40'000'000);
}

TEST_CASE("desk preset stays under one million parameters") {
  Stream visual(desk_visual_config(), 1);
  Stream audio(desk_audio_config(), 1);
  CHECK(visual.param_count() < 1'000'000);
  CHECK(audio.param_count() < 1'000'000);
  CHECK(visual.param_count() == stream_param_count(desk_visual_config()));
  CHECK(audio.param_count() == stream_param_count(desk_audio_config()));
}

TEST_CASE("desk cfg with embed 128 on (3,8,64,64) yields a 128-long embedding") {
  Rng rng(3);
  Stream visual(desk_visual_config(8, 64, 64, 128), 5);
  Stream audio(desk_audio_config(13, 98, 128), 5);
  SegmentPair seg = dummy_segment(rng, 8, 64, 64, 13, 98);
  FeatureConfig fcfg;
  const EmbeddingPair pair = forward_pair(visual, audio, seg, fcfg, 8);
  CHECK(pair.f_v.size() == 128);
  CHECK(pair.f_a.size() == 128);
  CHECK(pair.p_v > 0.0);
  CHECK(pair.p_v < 1.0);
  CHECK(pair.p_a > 0.0);
  CHECK(pair.p_a < 1.0);
}

TEST_CASE("same config and seed produce identical initial parameters") {
  const StreamConfig cfg = desk_visual_config(8, 32, 32, 64);
  Stream a(cfg, 42), b(cfg, 42), c(cfg, 43);
  auto pa = a.params(), pb = b.params(), pc = c.params();
  REQUIRE(pa.size() == pb.size());
  bool all_equal = true, any_diff_seed = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    for (std::int64_t j = 0; j < pa[i]->value.size(); ++j) {
      if (pa[i]->value[j] != pb[i]->value[j]) all_equal = false;
      if (pa[i]->value[j] != pc[i]->value[j]) any_diff_seed = true;
    }
  }
  CHECK(all_equal);
  CHECK(any_diff_seed);
}

TEST_CASE("evaluation mode is deterministic and batch-equivalent") {
  Rng rng(11);
  Stream visual(desk_visual_config(8, 32, 32, 64), 9);

  std::vector<Tensor> items;
  std::vector<const Tensor*> ptrs;
  for (int i = 0; i < 5; ++i) {
    Tensor t({3, 8, 32, 32});
    for (std::int64_t j = 0; j < t.size(); ++j) t[j] = rng.uniform();
    items.push_back(std::move(t));
  }
  for (const auto& t : items) ptrs.push_back(&t);

  const Tensor batch = to_batch(ptrs, StreamKind::visual);
  auto out1 = visual.forward(batch, false);
  auto out2 = visual.forward(batch, false);
  for (std::int64_t i = 0; i < out1.embed.size(); ++i) CHECK(out1.embed[i] == out2.embed[i]);

  for (std::size_t i = 0; i < items.size(); ++i) {
    auto single = visual.forward(to_batch({ptrs[i]}, StreamKind::visual), false);
    for (std::int64_t e = 0; e < 64; ++e)
      CHECK(single.embed[e] ==
            doctest::Approx(out1.embed.at2(static_cast<std::int64_t>(i), e)).epsilon(1e-5));
    for (std::int64_t l = 0; l < 2; ++l)
      CHECK(single.logits[l] ==
            doctest::Approx(out1.logits.at2(static_cast<std::int64_t>(i), l)).epsilon(1e-5));
  }
}

TEST_CASE("mismatched embedding dimensions are rejected") {
  Rng rng(13);
  Stream visual(desk_visual_config(8, 32, 32, 64), 1);
  Stream audio(desk_audio_config(13, 98, 32), 1);
  SegmentPair seg = dummy_segment(rng, 8, 32, 32, 13, 98);
  FeatureConfig fcfg;
  CHECK_THROWS_AS(forward_pair(visual, audio, seg, fcfg, 8), UsageError);
}

TEST_CASE("head probabilities are softmax outputs: complements sum to one") {
  Tensor logits({3, 2});
  logits.at2(0, 0) = 2.0;
  logits.at2(0, 1) = -1.0;
  logits.at2(1, 0) = -3.5;
  logits.at2(1, 1) = 0.25;
  logits.at2(2, 0) = 0.0;
  logits.at2(2, 1) = 0.0;
  const auto p = fake_probabilities(logits);
  CHECK(p[2] == doctest::Approx(0.5).epsilon(1e-12));
  for (double v : p) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
  // p(real) = 1 - p(fake) by construction of the 2-way softmax.
  const double p0 = std::exp(2.0) / (std::exp(2.0) + std::exp(-1.0));
  CHECK(p[0] == doctest::Approx(1.0 - p0).epsilon(1e-12));
}

TEST_CASE("every parameter receives gradient somewhere (no dead graph)") {
  StreamConfig vcfg = desk_visual_config(4, 16, 16, 24);
  StreamConfig acfg = desk_audio_config(13, 20, 24);
  vcfg.dropout_p = 0.0;
  acfg.dropout_p = 0.0;
  Stream visual(vcfg, 77);
  Stream audio(acfg, 77);

  std::vector<bool> visual_touched(visual.params().size(), false);
  std::vector<bool> audio_touched(audio.params().size(), false);
  Rng rng(78);
  ObjectiveConfig cfg;

  for (int batch_round = 0; batch_round < 3; ++batch_round) {
    const std::int64_t B = 6;
    Tensor vis({B, 3, 4, 16, 16});
    Tensor aud({B, 1, 1, 13, 20});
    for (std::int64_t i = 0; i < vis.size(); ++i) vis[i] = rng.uniform();
    for (std::int64_t i = 0; i < aud.size(); ++i) aud[i] = rng.normal();
    std::vector<int> labels{0, 1, 0, 1, 1, 0};

    visual.zero_grads();
    audio.zero_grads();
    auto vo = visual.forward(vis, true);
    auto ao = audio.forward(aud, true);
    const BatchLoss loss =
        combined_loss_batch(vo.embed, ao.embed, vo.logits, ao.logits, labels, cfg);
    visual.backward(loss.d_fv, loss.d_logits_v);
    audio.backward(loss.d_fa, loss.d_logits_a);

    auto mark = [](Stream& s, std::vector<bool>& touched) {
      auto params = s.params();
      for (std::size_t i = 0; i < params.size(); ++i)
        for (std::int64_t j = 0; j < params[i]->grad.size(); ++j)
          if (params[i]->grad[j] != 0.0) {
            touched[i] = true;
            break;
          }
    };
    mark(visual, visual_touched);
    mark(audio, audio_touched);
  }
  for (std::size_t i = 0; i < visual_touched.size(); ++i) {
    INFO("visual param ", visual.params()[i]->name);
    CHECK(visual_touched[i]);
  }
  for (std::size_t i = 0; i < audio_touched.size(); ++i) {
    INFO("audio param ", audio.params()[i]->name);
    CHECK(audio_touched[i]);
  }
}

TEST_CASE("untrained streams score near-chance AUC on synthetic segments") {
  SynthConfig scfg;
  scfg.n_real = 25;
  scfg.n_fake = 25;
  scfg.duration_s = 4.0;
  scfg.fps = 8;
  scfg.frame_h = 16;
  scfg.frame_w = 16;
  scfg.seed = 1234;
  const auto clips = generate_synthetic_corpus(scfg);

  FeatureConfig fcfg;
  Stream visual(desk_visual_config(8, 16, 16, 32), 99);
  Stream audio(desk_audio_config(13, 98, 32), 99);

  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& clip : clips)
    for (const auto& seg : segment_clip(clip, fcfg)) {
      const EmbeddingPair pair = forward_pair(visual, audio, seg, fcfg, clip.fps);
      scores.push_back(dissimilarity(pair.f_v, pair.f_a));
      labels.push_back(seg.label);
    }
  REQUIRE(scores.size() == 200);
  const double a = auc(scores, labels);
  CHECK(a > 0.4);
  CHECK(a < 0.6);
}

TEST_CASE("stream rejects shape-inconsistent configs naming the block") {
  StreamConfig cfg = desk_visual_config(8, 32, 32, 64);
  cfg.conv_spec[0].kernel = {9, 3, 3};  // temporal kernel exceeds 8 frames + padding
  cfg.conv_spec[0].pad = {0, 1, 1};
  try {
    infer_stream_shapes(cfg);
    FAIL("expected UsageError");
  } catch (const UsageError& e) {
    CHECK(std::string(e.what()).find("block1") != std::string::npos);
  }
}
