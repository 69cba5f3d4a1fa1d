// Copyright (c) 2026 mds contributors
// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "mds/corpus.hpp"
#include "mds/evalkit.hpp"
#include "mds/features.hpp"
#include "mds/objective.hpp"
#include "mds/scoring.hpp"
#include "mds/streams.hpp"

namespace {

using namespace mds;

void BM_mfcc_one_second(benchmark::State& state) {
  Rng rng(1);
  std::vector<double> wav(16000);
  for (auto& v : wav) v = 0.4 * rng.normal();
  FeatureConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(compute_mfcc(wav, 16000, cfg));
  }
}
BENCHMARK(BM_mfcc_one_second);

void BM_visual_forward_batch16(benchmark::State& state) {
  Stream visual(desk_visual_config(8, 32, 32, 64), 1);
  Rng rng(2);
  Tensor batch({16, 3, 8, 32, 32});
  for (std::int64_t i = 0; i < batch.size(); ++i) batch[i] = rng.uniform();
  for (auto _ : state) {
    auto out = visual.forward(batch, /*train=*/false);
    benchmark::DoNotOptimize(out.embed.data());
  }
}
BENCHMARK(BM_visual_forward_batch16);

void BM_visual_train_step_batch16(benchmark::State& state) {
  StreamConfig cfg = desk_visual_config(8, 32, 32, 64);
  cfg.dropout_p = 0.0;
  Stream visual(cfg, 1);
  Rng rng(3);
  Tensor batch({16, 3, 8, 32, 32});
  for (std::int64_t i = 0; i < batch.size(); ++i) batch[i] = rng.uniform();
  Tensor d_embed({16, 64});
  Tensor d_logits({16, 2});
  for (std::int64_t i = 0; i < d_embed.size(); ++i) d_embed[i] = 0.01;
  for (std::int64_t i = 0; i < d_logits.size(); ++i) d_logits[i] = 0.01;
  for (auto _ : state) {
    visual.zero_grads();
    auto out = visual.forward(batch, /*train=*/true, &rng);
    visual.backward(d_embed, d_logits);
    benchmark::DoNotOptimize(out.embed.data());
  }
}
BENCHMARK(BM_visual_train_step_batch16);

void BM_score_clip(benchmark::State& state) {
  Stream visual(desk_visual_config(8, 32, 32, 64), 1);
  Stream audio(desk_audio_config(13, 98, 64), 1);
  SynthConfig scfg;
  scfg.n_real = 1;
  scfg.n_fake = 0;
  scfg.duration_s = 4.0;
  scfg.fps = 8;
  scfg.frame_h = 32;
  scfg.frame_w = 32;
  const ClipRecord clip = generate_synthetic_corpus(scfg)[0];
  FeatureConfig fcfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(score_clip(visual, audio, clip, fcfg).mds);
  }
}
BENCHMARK(BM_score_clip);

void BM_auc_10k(benchmark::State& state) {
  Rng rng(4);
  std::vector<double> scores;
  std::vector<int> labels;
  for (int i = 0; i < 10000; ++i) {
    scores.push_back(rng.normal());
    labels.push_back(i % 2);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(auc(scores, labels));
  }
}
BENCHMARK(BM_auc_10k);

void BM_synth_clip(benchmark::State& state) {
  SynthConfig cfg;
  cfg.n_real = 1;
  cfg.n_fake = 0;
  cfg.duration_s = 4.0;
  cfg.fps = 8;
  cfg.frame_h = 32;
  cfg.frame_w = 32;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    cfg.seed = seed++;
    benchmark::DoNotOptimize(generate_synthetic_corpus(cfg).front().waveform.back());
  }
}
BENCHMARK(BM_synth_clip);

}  // namespace

BENCHMARK_MAIN();
