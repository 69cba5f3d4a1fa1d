// Copyright (c) 2026 mds contributors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "mds/error.hpp"
#include "mds/io.hpp"
#include "mds/scoring.hpp"
#include "support/test_util.hpp"

using namespace mds;

namespace {

ClipRecord tiny_clip(double duration_s, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.n_real = 1;
  cfg.n_fake = 0;
  cfg.duration_s = duration_s;
  cfg.fps = 8;
  cfg.frame_h = 16;
  cfg.frame_w = 16;
  cfg.seed = seed;
  return generate_synthetic_corpus(cfg)[0];
}

}  // namespace

TEST_CASE("score_clip: mds is the exact mean of per-segment dissimilarities") {
  FeatureConfig fcfg;
  Stream visual(desk_visual_config(8, 16, 16, 32), 4);
  Stream audio(desk_audio_config(13, 98, 32), 4);

  const ClipRecord clip = tiny_clip(5.0, 10);
  const ClipScore score = score_clip(visual, audio, clip, fcfg);
  REQUIRE(score.per_segment_d.size() == 5);
  double mean = 0.0;
  for (double d : score.per_segment_d) mean += d;
  mean /= 5.0;
  CHECK(std::abs(score.mds - mean) < 1e-12);

  // Single-segment clip: mds equals d_0.
  const ClipRecord one = tiny_clip(1.0, 11);
  const ClipScore s1 = score_clip(visual, audio, one, fcfg);
  REQUIRE(s1.per_segment_d.size() == 1);
  CHECK(s1.mds == s1.per_segment_d[0]);

  // Deterministic: scoring twice gives the identical report.
  const ClipScore again = score_clip(visual, audio, clip, fcfg);
  for (std::size_t i = 0; i < 5; ++i) CHECK(again.per_segment_d[i] == score.per_segment_d[i]);
}

TEST_CASE("calibrate_threshold is the class-mean midpoint") {
  std::vector<std::pair<double, int>> scores{{0.3, 0}, {0.5, 0}, {1.0, 1}, {1.4, 1}};
  CHECK(calibrate_threshold(scores) == doctest::Approx(0.8).epsilon(1e-15));

  SUBCASE("degenerate equal means are flagged") {
    std::vector<std::pair<double, int>> same{{0.7, 0}, {0.7, 1}};
    bool degenerate = false;
    CHECK(calibrate_threshold(same, &degenerate) == doctest::Approx(0.7));
    CHECK(degenerate);
  }
  SUBCASE("single-class input rejected") {
    std::vector<std::pair<double, int>> only_real{{0.3, 0}, {0.4, 0}};
    CHECK_THROWS_AS(calibrate_threshold(only_real), UsageError);
  }
  SUBCASE("random lists match a direct recomputation") {
    Rng rng(6);
    for (int trial = 0; trial < 25; ++trial) {
      std::vector<std::pair<double, int>> list;
      double s0 = 0, s1 = 0;
      int n0 = 0, n1 = 0;
      for (int i = 0; i < 30; ++i) {
        const int y = rng.uniform() < 0.5 ? 0 : 1;
        const double v = rng.uniform(0, 3);
        list.emplace_back(v, y);
        if (y == 0) {
          s0 += v;
          ++n0;
        } else {
          s1 += v;
          ++n1;
        }
      }
      if (n0 == 0 || n1 == 0) continue;
      CHECK(calibrate_threshold(list) ==
            doctest::Approx((s0 / n0 + s1 / n1) / 2.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("classify: orientation and tie rule") {
  CHECK(classify(0.5, 0.8) == 0);  // low dissonance -> real
  CHECK(classify(1.5, 0.8) == 1);
  CHECK(classify(0.8, 0.8) == 1);  // tie -> fake
}

TEST_CASE("classify is invariant under joint strictly increasing transforms") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const double mds = rng.uniform(0, 2);
    const double tau = rng.uniform(0, 2);
    auto f = [](double x) { return std::exp(1.7 * x) + 3.0 * x; };
    CHECK(classify(mds, tau) == classify(f(mds), f(tau)));
  }
}

TEST_CASE("localize thresholds segments and merges spans") {
  const std::vector<double> d{0.1, 0.1, 2.0, 2.0, 0.1};
  const auto spans = localize(d, 1.0, 1.0);
  REQUIRE(spans.size() == 3);
  CHECK(spans[0].start_s == 0.0);
  CHECK(spans[0].end_s == 2.0);
  CHECK(spans[0].label == 0);
  CHECK(spans[1].start_s == 2.0);
  CHECK(spans[1].end_s == 4.0);
  CHECK(spans[1].label == 1);
  CHECK(spans[2].start_s == 4.0);
  CHECK(spans[2].end_s == 5.0);
  CHECK(spans[2].label == 0);

  SUBCASE("all below the threshold: one real span") {
    const auto all_real = localize({0.1, 0.2, 0.3}, 1.0, 1.0);
    REQUIRE(all_real.size() == 1);
    CHECK(all_real[0].label == 0);
    CHECK(all_real[0].end_s == 3.0);
  }
  SUBCASE("spans always partition [0, n*D]") {
    Rng rng(9);
    for (int trial = 0; trial < 40; ++trial) {
      std::vector<double> random_d;
      const int n = 1 + static_cast<int>(rng.uniform_int(12));
      for (int i = 0; i < n; ++i) random_d.push_back(rng.uniform(0, 2));
      const double tau = rng.uniform(0, 2);
      const double seg_s = 0.5 + rng.uniform();
      const auto out = localize(random_d, tau, seg_s);
      CHECK(out.front().start_s == 0.0);
      CHECK(out.back().end_s == doctest::Approx(n * seg_s));
      for (std::size_t i = 1; i < out.size(); ++i) {
        CHECK(out[i].start_s == out[i - 1].end_s);
        CHECK(out[i].label != out[i - 1].label);  // merged: adjacent spans differ
      }
    }
  }
  SUBCASE("optional median filter smooths single-segment spikes") {
    const std::vector<double> spiky{0.1, 2.0, 0.1, 0.1};
    CHECK(localize(spiky, 1.0, 1.0).size() == 3);
    const auto smoothed = localize(spiky, 1.0, 1.0, /*median_filter=*/true);
    REQUIRE(smoothed.size() == 1);
    CHECK(smoothed[0].label == 0);
  }
  SUBCASE("empty input rejected") { CHECK_THROWS_AS(localize({}, 1.0, 1.0), UsageError); }
}

TEST_CASE("score report json round-trip") {
  ScoreReport report;
  report.clip_id = "clip_7";
  report.per_segment_d = {0.2, 1.4, 0.3};
  report.mds = 0.6333;
  report.tau = 0.8;
  report.predicted_label = 0;
  report.spans = {{0.0, 1.0, 0}, {1.0, 2.0, 1}, {2.0, 3.0, 0}};
  const ScoreReport back = report_from_json(report_to_json(report));
  CHECK(back.clip_id == report.clip_id);
  CHECK(back.per_segment_d == report.per_segment_d);
  CHECK(back.mds == report.mds);
  CHECK(back.tau == report.tau);
  CHECK(back.spans.size() == 3);
  CHECK(back.spans[1].label == 1);
}

TEST_CASE("localization plot is written as a well-formed svg") {
  testutil::TempDir tmp("svg");
  ScoreReport report;
  report.clip_id = "plot_me";
  report.per_segment_d = {0.2, 0.3, 1.6, 1.8, 0.25, 0.2};
  report.mds = 0.725;
  report.tau = 1.0;
  report.predicted_label = 0;
  report.spans = localize(report.per_segment_d, report.tau, 1.0);
  const std::vector<SpanLabel> truth{{0, 2, 0}, {2, 4, 1}, {4, 6, 0}};
  write_localization_svg(report, 1.0, truth, tmp.path() / "plot.svg");
  const std::string svg = io::read_text_file(tmp.path() / "plot.svg");
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("plot_me") != std::string::npos);
  CHECK(svg.rfind("</svg>\n") == svg.size() - 7);
}
