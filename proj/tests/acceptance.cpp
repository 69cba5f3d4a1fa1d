// Copyright (c) 2026 mds contributors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one line per criterion, [PASS]/[FAIL], nonzero exit on
// any failure. Heavier criteria train real models; budget a few minutes.
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "mds/checkpoint.hpp"
#include "mds/config.hpp"
#include "mds/error.hpp"
#include "mds/evalkit.hpp"
#include "mds/io.hpp"
#include "mds/objective.hpp"
#include "mds/scoring.hpp"
#include "mds/trainer.hpp"
#include "support/mfcc_reference.hpp"

namespace fs = std::filesystem;
using namespace mds;

namespace {

int g_failures = 0;
fs::path g_work;

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

void report(int criterion, bool pass, const std::string& detail, double seconds) {
  std::printf("[%s] criterion %d: %s (%.1fs)\n", pass ? "PASS" : "FAIL", criterion,
              detail.c_str(), seconds);
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

// ---------------------------------------------------------------- oracles

double oracle_contrastive(const std::vector<double>& d, const std::vector<int>& y, double margin) {
  double s = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i)
    s += y[i] == 0 ? d[i] * d[i] : (margin > d[i] ? (margin - d[i]) * (margin - d[i]) : 0.0);
  return s / static_cast<double>(d.size());
}

double oracle_ce(double p, int y) {
  const double q = std::min(std::max(p, 1e-12), 1.0 - 1e-12);
  return y == 1 ? -std::log(q) : -std::log(1.0 - q);
}

double oracle_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  double wins = 0.0;
  std::int64_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i)
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[i] != 1 || labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  return wins / static_cast<double>(pairs);
}

// ------------------------------------------------------------- criterion 1

void criterion_1_loss_oracles() {
  Timer timer;
  Rng rng(101);
  double worst = 0.0;
  ObjectiveConfig cfg;
  for (int batch = 0; batch < 1000; ++batch) {
    const std::size_t n = 1 + rng.uniform_int(32);
    const std::size_t dim = 8 + rng.uniform_int(57);
    std::vector<EmbeddingPair> outputs;
    std::vector<int> labels;
    std::vector<double> d;
    for (std::size_t i = 0; i < n; ++i) {
      EmbeddingPair pair;
      for (std::size_t e = 0; e < dim; ++e) {
        pair.f_v.push_back(rng.normal());
        pair.f_a.push_back(rng.normal());
      }
      pair.p_v = rng.uniform(0.001, 0.999);
      pair.p_a = rng.uniform(0.001, 0.999);
      double sq = 0.0;
      for (std::size_t e = 0; e < dim; ++e)
        sq += (pair.f_v[e] - pair.f_a[e]) * (pair.f_v[e] - pair.f_a[e]);
      d.push_back(std::sqrt(sq));
      outputs.push_back(std::move(pair));
      labels.push_back(rng.uniform() < 0.5 ? 0 : 1);
    }
    const LossBreakdown got = combined_loss(outputs, labels, cfg);
    double ce_v = 0.0, ce_a = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      ce_v += oracle_ce(outputs[i].p_v, labels[i]);
      ce_a += oracle_ce(outputs[i].p_a, labels[i]);
    }
    const double want_l1 = oracle_contrastive(d, labels, cfg.margin);
    const double want_l2 = ce_v / static_cast<double>(n);
    const double want_l3 = ce_a / static_cast<double>(n);
    const double want_total = want_l1 + want_l2 + want_l3;
    auto rel = [](double a, double b) {
      return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-30});
    };
    worst = std::max({worst, rel(got.contrastive, want_l1), rel(got.ce_visual, want_l2),
                      rel(got.ce_audio, want_l3), rel(got.total, want_total)});
  }
  const double elapsed = timer.seconds();
  report(1, worst <= 1e-9 && elapsed < 60.0,
         "loss oracles on 1000 random batches, max rel err " + std::to_string(worst), elapsed);
}

// ------------------------------------------------------------- criterion 2

void criterion_2_gradient_checks() {
  Timer timer;
  double worst = 0.0;
  int kinks = 0;
  bool pass = true;
  for (std::uint64_t seed : {11ull, 22ull, 33ull}) {
    StreamConfig vcfg = desk_visual_config(4, 12, 12, 16);
    StreamConfig acfg = desk_audio_config(13, 20, 16);
    vcfg.dropout_p = 0.0;
    acfg.dropout_p = 0.0;
    for (auto& b : vcfg.conv_spec) b.out_channels = std::max<std::int64_t>(4, b.out_channels / 4);
    for (auto& b : acfg.conv_spec) b.out_channels = std::max<std::int64_t>(4, b.out_channels / 4);
    vcfg.fc_hidden = 16;
    acfg.fc_hidden = 16;
    Stream visual(vcfg, seed);
    Stream audio(acfg, seed);

    Rng rng(seed * 7 + 1);
    const std::int64_t B = 6;
    Tensor vis({B, 3, 4, 12, 12});
    Tensor aud({B, 1, 1, 13, 20});
    for (std::int64_t i = 0; i < vis.size(); ++i) vis[i] = rng.uniform();
    for (std::int64_t i = 0; i < aud.size(); ++i) aud[i] = rng.normal();
    const std::vector<int> labels{0, 1, 0, 1, 1, 0};

    const GradCheckResult r = gradient_check(visual, audio, vis, aud, labels, ObjectiveConfig{},
                                             1e-4, 150, seed);
    worst = std::max(worst, r.max_rel_error);
    kinks += r.excluded_margin_kink + r.excluded_activation_kink;
    pass = pass && r.max_rel_error < 1e-4 && r.coords_checked > 0;
  }
  const double elapsed = timer.seconds();
  report(2, pass && elapsed < 300.0,
         "finite differences through both desk streams on 3 seeds, max rel err " +
             std::to_string(worst) + ", " + std::to_string(kinks) + " kink exclusions",
         elapsed);
}

// ------------------------------------------------------------- criterion 3

void criterion_3_mds_tau_oracles() {
  Timer timer;
  bool pass = true;

  // mds == mean(per-segment d) through the real scoring path.
  Stream visual(desk_visual_config(8, 16, 16, 24), 303);
  Stream audio(desk_audio_config(13, 98, 24), 303);
  FeatureConfig fcfg;
  SynthConfig scfg;
  scfg.n_real = 6;
  scfg.n_fake = 0;
  scfg.duration_s = 5.0;
  scfg.fps = 8;
  scfg.frame_h = 16;
  scfg.frame_w = 16;
  scfg.seed = 301;
  for (const auto& clip : generate_synthetic_corpus(scfg)) {
    const ClipScore score = score_clip(visual, audio, clip, fcfg);
    double mean = 0.0;
    for (double d : score.per_segment_d) mean += d;
    mean /= static_cast<double>(score.per_segment_d.size());
    pass = pass && std::abs(score.mds - mean) <= 1e-12;
  }

  // tau == midpoint of class means, against a direct recomputation.
  Rng rng(302);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::pair<double, int>> scores;
    double s0 = 0, s1 = 0;
    int n0 = 0, n1 = 0;
    const int n = 2 + static_cast<int>(rng.uniform_int(60));
    for (int i = 0; i < n; ++i) {
      const int y = rng.uniform() < 0.5 ? 0 : 1;
      const double v = rng.uniform(0.0, 4.0);
      scores.emplace_back(v, y);
      (y == 0 ? s0 : s1) += v;
      ++(y == 0 ? n0 : n1);
    }
    if (n0 == 0 || n1 == 0) continue;
    const double want = 0.5 * (s0 / n0 + s1 / n1);
    pass = pass && std::abs(calibrate_threshold(scores) - want) <= 1e-12;
  }
  report(3, pass, "mds aggregation and threshold calibration match direct recomputation to 1e-12",
         timer.seconds());
}

// ------------------------------------------------------------- criterion 4

void criterion_4_auc_oracle() {
  Timer timer;
  bool pass = true;
  Rng rng(404);

  // Exhaustive label patterns for every input size up to 12, tie-free scores.
  for (int n = 2; n <= 12; ++n) {
    std::vector<double> scores(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      scores[static_cast<std::size_t>(i)] = static_cast<double>(i) + rng.uniform(0.0, 0.5);
    std::vector<std::size_t> perm(scores.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    rng.shuffle(perm);
    std::vector<double> shuffled(scores.size());
    for (std::size_t i = 0; i < perm.size(); ++i) shuffled[i] = scores[perm[i]];

    for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
      std::vector<int> labels;
      for (int i = 0; i < n; ++i) labels.push_back((mask >> i) & 1);
      if (auc(shuffled, labels) != oracle_auc(shuffled, labels)) pass = false;
    }
  }

  // 100 random larger tie-free cases, exact equality.
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 13 + static_cast<int>(rng.uniform_int(188));
    std::vector<double> scores;
    std::vector<int> labels;
    bool has0 = false, has1 = false;
    for (int i = 0; i < n; ++i) {
      scores.push_back(static_cast<double>(i) + rng.uniform(0.0, 0.999));  // strictly distinct
      labels.push_back(rng.uniform() < 0.5 ? 0 : 1);
      (labels.back() ? has1 : has0) = true;
    }
    if (!has0) labels[0] = 0;
    if (!has1) labels[1] = 1;
    std::vector<std::size_t> perm(scores.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    rng.shuffle(perm);
    std::vector<double> s2(scores.size());
    std::vector<int> l2(labels.size());
    for (std::size_t i = 0; i < perm.size(); ++i) {
      s2[i] = scores[perm[i]];
      l2[i] = labels[perm[i]];
    }
    if (auc(s2, l2) != oracle_auc(s2, l2)) pass = false;
  }
  report(4, pass, "rank AUC equals brute-force pair counting (exhaustive n<=12 + 100 random)",
         timer.seconds());
}

// ----------------------------------------------------- criteria 5 and 7

struct TrainedModel {
  fs::path manifest_path;
  fs::path checkpoint;
  double test_auc = 0.0;
  double tau = 0.0;
};

TrainedModel criterion_5_end_to_end() {
  Timer timer;
  TrainedModel out;

  // 300 clips: 200-clip train split, 40 val, 60-clip held-out test.
  SynthConfig scfg;
  scfg.n_real = 150;
  scfg.n_fake = 150;
  scfg.duration_s = 4.0;
  scfg.fps = 8;
  scfg.frame_h = 32;
  scfg.frame_w = 32;
  scfg.seed = 42;
  const auto clips = generate_synthetic_corpus(scfg);

  const fs::path data = g_work / "c5_data";
  CorpusManifest manifest;
  manifest.root = data;
  for (const auto& clip : clips)
    manifest.clips.push_back(write_clip_data(clip, data, fs::path("clips") / clip.clip_id));
  for (int label = 0; label <= 1; ++label) {
    int idx = 0;
    for (const auto& clip : clips) {
      if (clip.label != label) continue;
      manifest.split[clip.clip_id] = idx < 100 ? "train" : (idx < 120 ? "val" : "test");
      ++idx;
    }
  }
  save_manifest(manifest, data / "manifest.json");
  out.manifest_path = data / "manifest.json";

  const CorpusManifest loaded = load_manifest(out.manifest_path);
  FeatureConfig fcfg;
  TrainConfig tcfg;
  tcfg.epochs = 6;  // well under the 30-epoch budget
  tcfg.batch_size = 16;
  tcfg.seed = 1;
  const TrainResult tr = train(loaded, fcfg, desk_visual_config(8, 32, 32, 64),
                               desk_audio_config(13, 98, 64), tcfg, g_work / "c5_run");
  out.checkpoint = tr.best_checkpoint;

  ModelBundle bundle = load_model(out.checkpoint);
  const EvalReport report_test = evaluate_split(loaded, *bundle.visual, *bundle.audio,
                                                bundle.features, nullptr, "test");
  out.test_auc = report_test.auc_video;
  out.tau = report_test.tau;

  const double elapsed = timer.seconds();
  report(5, out.test_auc >= 0.90 && elapsed < 600.0 && tr.epochs_run <= 30,
         "end-to-end synthetic detection: test AUC " + std::to_string(out.test_auc) +
             " (threshold 0.90), " + std::to_string(tr.epochs_run) + " epochs",
         elapsed);
  return out;
}

void criterion_7_localization(const TrainedModel& model) {
  Timer timer;
  SynthConfig scfg;
  scfg.n_real = 0;
  scfg.n_fake = 50;
  scfg.duration_s = 6.0;
  scfg.fps = 8;
  scfg.frame_h = 32;
  scfg.frame_w = 32;
  scfg.fake_modes = {FakeMode::splice};
  scfg.seed = 77;
  const auto clips = generate_synthetic_corpus(scfg);

  ModelBundle bundle = load_model(model.checkpoint);
  std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (const auto& clip : clips) {
    const ClipScore cs = score_clip(*bundle.visual, *bundle.audio, clip, bundle.features);
    const auto spans = localize(cs.per_segment_d, model.tau, bundle.features.segment_s);
    const auto m = localization_metrics(spans, clip.span_truth, bundle.features.segment_s);
    tp += m.tp;
    fp += m.fp;
    fn += m.fn;
    tn += m.tn;
  }
  const LocalizationMetrics agg = metrics_from_counts(tp, fp, fn, tn);
  const double elapsed = timer.seconds();
  report(7, agg.f1 >= 0.8 && elapsed < 180.0,
         "segment-level localization on 50 spliced clips: F1 " + std::to_string(agg.f1) +
             " (threshold 0.8)",
         elapsed);
}

// ------------------------------------------------------------- criterion 6

void criterion_6_ablation_ordering() {
  Timer timer;
  SynthConfig scfg;
  scfg.n_real = 60;
  scfg.n_fake = 60;
  scfg.duration_s = 3.0;
  scfg.fps = 8;
  scfg.frame_h = 16;
  scfg.frame_w = 16;
  scfg.seed = 5;
  const auto clips = generate_synthetic_corpus(scfg);
  std::map<std::string, std::string> split;
  for (int label = 0; label <= 1; ++label) {
    int idx = 0;
    for (const auto& clip : clips) {
      if (clip.label != label) continue;
      split[clip.clip_id] = idx < 40 ? "train" : "test";
      ++idx;
    }
  }

  FeatureConfig fcfg;
  const StreamConfig vcfg = desk_visual_config(8, 16, 16, 48);
  const StreamConfig acfg = desk_audio_config(13, 98, 48);

  int seeds_holding = 0;
  std::string detail;
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    TrainConfig base;
    base.epochs = 6;
    base.batch_size = 16;
    base.seed = seed;
    // Four rows on the first seed reproduce the published table layout.
    std::vector<std::array<double, 3>> grid =
        seed == 1
            ? std::vector<std::array<double, 3>>{{0, 0, 1}, {1, 0, 0}, {0, 1, 0}, {1, 1, 1}}
            : std::vector<std::array<double, 3>>{{0, 0, 1}, {1, 0, 0}, {1, 1, 1}};
    const AblationReport rep = ablate(clips, split, fcfg, vcfg, acfg, base, grid,
                                      g_work / ("c6_seed" + std::to_string(seed)));
    if (seed == 1) std::printf("%s", ablation_table(rep).c_str());

    double audio_auc = -1, contrastive_auc = -1, combined_auc = -1;
    for (const auto& cell : rep.cells) {
      if (cell.failed) continue;
      if (cell.objective.lambda1 == 0 && cell.objective.lambda2 == 0) audio_auc = cell.auc_value;
      if (cell.objective.lambda1 == 1 && cell.objective.lambda2 == 0 &&
          cell.objective.lambda3 == 0)
        contrastive_auc = cell.auc_value;
      if (cell.objective.lambda1 == 1 && cell.objective.lambda2 == 1 &&
          cell.objective.lambda3 == 1)
        combined_auc = cell.auc_value;
    }
    const bool holds = combined_auc >= contrastive_auc && audio_auc >= 0.4 && audio_auc <= 0.6 &&
                       combined_auc >= 0 && contrastive_auc >= 0;
    if (holds) ++seeds_holding;
    detail += "seed" + std::to_string(seed) + (holds ? "+" : "-");
  }
  report(6, seeds_holding >= 2,
         "ablation ordering (combined >= contrastive, audio-only in [0.4,0.6]) on " +
             std::to_string(seeds_holding) + "/3 seeds [" + detail + "]",
         timer.seconds());
}

// ------------------------------------------------------------- criterion 8

void criterion_8_determinism() {
  Timer timer;
  SynthConfig scfg;
  scfg.n_real = 10;
  scfg.n_fake = 10;
  scfg.duration_s = 3.0;
  scfg.fps = 8;
  scfg.frame_h = 16;
  scfg.frame_w = 16;
  scfg.seed = 9;
  const auto clips = generate_synthetic_corpus(scfg);

  const fs::path data = g_work / "c8_data";
  CorpusManifest manifest;
  manifest.root = data;
  for (const auto& clip : clips)
    manifest.clips.push_back(write_clip_data(clip, data, fs::path("clips") / clip.clip_id));
  for (const auto& clip : clips) {
    const int idx = std::stoi(clip.clip_id.substr(1));
    manifest.split[clip.clip_id] = idx < 8 ? "train" : "val";
  }
  save_manifest(manifest, data / "manifest.json");
  const CorpusManifest loaded = load_manifest(data / "manifest.json");

  FeatureConfig fcfg;
  const StreamConfig vcfg = desk_visual_config(8, 16, 16, 32);
  const StreamConfig acfg = desk_audio_config(13, 98, 32);
  TrainConfig tcfg;
  tcfg.epochs = 3;
  tcfg.batch_size = 8;
  tcfg.seed = 4;

  // (a) Two fresh runs produce byte-identical metrics logs.
  const TrainResult run1 = train(loaded, fcfg, vcfg, acfg, tcfg, g_work / "c8_a");
  const TrainResult run2 = train(loaded, fcfg, vcfg, acfg, tcfg, g_work / "c8_b");
  const bool logs_equal =
      io::read_text_file(run1.metrics_path) == io::read_text_file(run2.metrics_path);

  // (b) Resume from epoch 2 to 4 equals a straight 4-epoch run, parameter-exact.
  TrainConfig four = tcfg;
  four.epochs = 4;
  const TrainResult straight = train(loaded, fcfg, vcfg, acfg, four, g_work / "c8_straight");
  TrainConfig two = tcfg;
  two.epochs = 2;
  const TrainResult half = train(loaded, fcfg, vcfg, acfg, two, g_work / "c8_half");
  const TrainResult resumed = resume(loaded, half.last_checkpoint, g_work / "c8_resumed", 4);

  const CheckpointData a = load_checkpoint(straight.last_checkpoint);
  const CheckpointData b = load_checkpoint(resumed.last_checkpoint);
  bool params_equal = true;
  for (const auto& [name, blob] : a.blobs) {
    if (name.rfind("param/", 0) != 0) continue;
    const auto it = b.blobs.find(name);
    if (it == b.blobs.end() || it->second != blob) params_equal = false;
  }
  report(8, logs_equal && params_equal,
         std::string("determinism: identical metrics logs (") + (logs_equal ? "yes" : "NO") +
             "), resume reproduces final parameters exactly (" + (params_equal ? "yes" : "NO") +
             ")",
         timer.seconds());
}

// ------------------------------------------------------------- criterion 9

void criterion_9_mfcc_reference() {
  Timer timer;
  FeatureConfig cfg;
  Rng rng(909);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 6400 + rng.uniform_int(3200);  // 0.4-0.6 s at 16 kHz
    std::vector<double> sig(n);
    for (auto& v : sig) v = 0.5 * rng.normal();
    const Tensor got = compute_mfcc(sig, 16000, cfg);
    const auto want = testref::reference_mfcc(sig, 16000, cfg.win_len_s, cfg.hop_s, 13, 0, 0, 0);
    double num = 0.0, den = 0.0;
    for (std::int64_t c = 0; c < got.dim(0); ++c)
      for (std::int64_t t = 0; t < got.dim(1); ++t) {
        const double w = want[static_cast<std::size_t>(c)][static_cast<std::size_t>(t)];
        num += (got.at2(c, t) - w) * (got.at2(c, t) - w);
        den += w * w;
      }
    worst = std::max(worst, std::sqrt(num / den));
  }

  // One-hop shift covariance to 1e-9.
  bool shift_ok = true;
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> sig(16000);
    for (auto& v : sig) v = 0.5 * rng.normal();
    std::vector<double> delayed(160, 0.0);
    delayed.insert(delayed.end(), sig.begin(), sig.end());
    const Tensor base = compute_mfcc(sig, 16000, cfg);
    const Tensor shifted = compute_mfcc(delayed, 16000, cfg);
    for (std::int64_t c = 0; c < 13 && shift_ok; ++c)
      for (std::int64_t t = 0; t < base.dim(1); ++t)
        if (std::abs(shifted.at2(c, t + 1) - base.at2(c, t)) > 1e-9) shift_ok = false;
  }
  report(9, worst < 1e-6 && shift_ok,
         "mfcc vs independent reference on 20 random signals, max rel L2 " +
             std::to_string(worst) + ", shift covariance to 1e-9",
         timer.seconds());
}

}  // namespace

int main() {
  g_work = fs::temp_directory_path() / ("mds_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(g_work);
  std::printf("acceptance workspace: %s\n", g_work.string().c_str());

  Timer total;
  try {
    criterion_1_loss_oracles();
    criterion_2_gradient_checks();
    criterion_3_mds_tau_oracles();
    criterion_4_auc_oracle();
    const TrainedModel model = criterion_5_end_to_end();
    criterion_6_ablation_ordering();
    criterion_7_localization(model);
    criterion_8_determinism();
    criterion_9_mfcc_reference();
  } catch (const std::exception& e) {
    std::printf("[FAIL] acceptance aborted: %s\n", e.what());
    ++g_failures;
  }

  std::printf("%s in %.1fs\n", g_failures ? "ACCEPTANCE FAILED" : "all criteria passed",
              total.seconds());
  if (g_failures == 0) {
    std::error_code ec;
    fs::remove_all(g_work, ec);
  } else {
    std::printf("workspace kept for inspection: %s\n", g_work.string().c_str());
  }
  return g_failures ? 1 : 0;
}
