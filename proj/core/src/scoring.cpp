// Copyright (c) 2026 mds contributors
// SPDX-License-Identifier: Apache-2.0
#include "mds/scoring.hpp"

#include <algorithm>
#include <cmath>

#include "mds/error.hpp"
#include "mds/objective.hpp"
#include "mds/svg.hpp"

namespace mds {

ClipScore score_clip(Stream& visual, Stream& audio, const ClipRecord& clip,
                     const FeatureConfig& fcfg, const VisualStats* stats) {
  check_usage(visual.config().embed_dim == audio.config().embed_dim,
              "score: stream embedding dimensions differ");
  const auto segments = segment_clip(clip, fcfg);
  ClipScore score;
  const std::int64_t E = visual.config().embed_dim;

  for (std::size_t at = 0; at < segments.size(); at += 32) {
    const std::size_t take = std::min<std::size_t>(32, segments.size() - at);
    std::vector<Tensor> prepared;
    std::vector<const Tensor*> vis_items, aud_items;
    prepared.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
      prepared.push_back(prepare_visual(segments[at + i].visual, fcfg, clip.fps, stats));
      vis_items.push_back(&prepared.back());
      aud_items.push_back(&segments[at + i].audio_mfcc);
    }
    auto vo = visual.forward(to_batch(vis_items, StreamKind::visual), /*train=*/false);
    auto ao = audio.forward(to_batch(aud_items, StreamKind::audio), /*train=*/false);
    for (std::size_t i = 0; i < take; ++i)
      score.per_segment_d.push_back(dissimilarity(
          std::span<const double>(vo.embed.data() + static_cast<std::int64_t>(i) * E, E),
          std::span<const double>(ao.embed.data() + static_cast<std::int64_t>(i) * E, E)));
  }

  double sum = 0.0;
  for (double d : score.per_segment_d) sum += d;
  score.mds = sum / static_cast<double>(score.per_segment_d.size());
  return score;
}

double calibrate_threshold(const std::vector<std::pair<double, int>>& train_scores,
                           bool* degenerate) {
  double sum0 = 0.0, sum1 = 0.0;
  std::int64_t n0 = 0, n1 = 0;
  for (const auto& [mds, y] : train_scores) {
    check_usage(y == 0 || y == 1, "calibrate: labels must be 0 or 1");
    if (y == 0) {
      sum0 += mds;
      ++n0;
    } else {
      sum1 += mds;
      ++n1;
    }
  }
  check_usage(n0 > 0 && n1 > 0, "calibrate: both classes required");
  const double mean0 = sum0 / static_cast<double>(n0);
  const double mean1 = sum1 / static_cast<double>(n1);
  if (degenerate) *degenerate = mean0 == mean1;
  return 0.5 * (mean0 + mean1);
}

int classify(double mds, double tau) { return mds >= tau ? 1 : 0; }

std::vector<double> median_filter3(const std::vector<double>& values) {
  if (values.size() < 3) return values;
  std::vector<double> out = values;
  for (std::size_t i = 1; i + 1 < values.size(); ++i) {
    double a = values[i - 1], b = values[i], c = values[i + 1];
    out[i] = std::max(std::min(a, b), std::min(std::max(a, b), c));
  }
  return out;
}

std::vector<SpanLabel> localize(const std::vector<double>& per_segment_d, double tau_seg,
                                double segment_s, bool median_filter) {
  check_usage(!per_segment_d.empty(), "localize: empty dissimilarity list");
  check_usage(segment_s > 0, "localize: segment_s must be positive");
  const std::vector<double> d = median_filter ? median_filter3(per_segment_d) : per_segment_d;

  std::vector<SpanLabel> spans;
  for (std::size_t t = 0; t < d.size(); ++t) {
    const int label = d[t] >= tau_seg ? 1 : 0;
    const double t0 = static_cast<double>(t) * segment_s;
    const double t1 = static_cast<double>(t + 1) * segment_s;
    if (!spans.empty() && spans.back().label == label)
      spans.back().end_s = t1;
    else
      spans.push_back({t0, t1, label});
  }
  return spans;
}

ScoreReport make_score_report(const std::string& clip_id, const ClipScore& score, double tau,
                              std::optional<double> tau_seg, double segment_s,
                              bool median_filter) {
  ScoreReport report;
  report.clip_id = clip_id;
  report.per_segment_d = score.per_segment_d;
  report.mds = score.mds;
  report.tau = tau;
  report.predicted_label = classify(score.mds, tau);
  report.spans = localize(score.per_segment_d, tau_seg.value_or(tau), segment_s, median_filter);
  return report;
}

nlohmann::json report_to_json(const ScoreReport& report) {
  nlohmann::json spans = nlohmann::json::array();
  for (const auto& s : report.spans)
    spans.push_back(nlohmann::json::array({s.start_s, s.end_s, s.label}));
  return nlohmann::json{{"clip_id", report.clip_id},
                        {"per_segment_d", report.per_segment_d},
                        {"mds", report.mds},
                        {"tau", report.tau},
                        {"predicted_label", report.predicted_label},
                        {"spans", spans}};
}

ScoreReport report_from_json(const nlohmann::json& j) {
  ScoreReport report;
  report.clip_id = j.at("clip_id").get<std::string>();
  report.per_segment_d = j.at("per_segment_d").get<std::vector<double>>();
  report.mds = j.at("mds").get<double>();
  report.tau = j.at("tau").get<double>();
  report.predicted_label = j.at("predicted_label").get<int>();
  for (const auto& sj : j.at("spans"))
    report.spans.push_back({sj[0].get<double>(), sj[1].get<double>(), sj[2].get<int>()});
  return report;
}

void write_localization_svg(const ScoreReport& report, double segment_s,
                            const std::vector<SpanLabel>& truth,
                            const std::filesystem::path& path) {
  const double W = 640, H = 320, ml = 52, mr = 16, mt = 34, mb = 40;
  const double pw = W - ml - mr, ph = H - mt - mb;
  const auto& d = report.per_segment_d;
  const double duration = static_cast<double>(d.size()) * segment_s;
  double dmax = report.tau;
  for (double v : d) dmax = std::max(dmax, v);
  dmax *= 1.15;
  if (dmax <= 0) dmax = 1.0;

  svg::Canvas canvas(W, H);
  auto X = [&](double t) { return ml + pw * t / duration; };
  auto Y = [&](double v) { return mt + ph * (1.0 - v / dmax); };

  for (const auto& s : truth)
    if (s.label == 1)
      canvas.rect(X(s.start_s), mt, X(s.end_s) - X(s.start_s), ph, "#f4c7c3", 0.55);

  canvas.line(ml, mt, ml, mt + ph, "#444");
  canvas.line(ml, mt + ph, ml + pw, mt + ph, "#444");
  for (int t = 0; t <= static_cast<int>(duration + 1e-9); ++t) {
    canvas.line(X(t), mt + ph, X(t), mt + ph + 4, "#444");
    canvas.text(X(t), mt + ph + 16, std::to_string(t), 10, "#333", "middle");
  }
  for (int k = 0; k <= 4; ++k) {
    const double v = dmax * k / 4.0;
    char lbl[16];
    std::snprintf(lbl, sizeof(lbl), "%.2f", v);
    canvas.line(ml - 4, Y(v), ml, Y(v), "#444");
    canvas.text(ml - 7, Y(v) + 3, lbl, 10, "#333", "end");
  }

  canvas.line(ml, Y(report.tau), ml + pw, Y(report.tau), "#666", 1.0, "6,4");
  canvas.text(ml + pw - 2, Y(report.tau) - 4, "threshold", 10, "#666", "end");

  // Step curve per segment, fake above the threshold in red, real in blue.
  for (std::size_t t = 0; t < d.size(); ++t) {
    const std::string color = d[t] >= report.tau ? "#c62828" : "#1565c0";
    canvas.line(X(static_cast<double>(t) * segment_s), Y(d[t]),
                X(static_cast<double>(t + 1) * segment_s), Y(d[t]), color, 2.2);
    if (t > 0)
      canvas.line(X(static_cast<double>(t) * segment_s), Y(d[t - 1]),
                  X(static_cast<double>(t) * segment_s), Y(d[t]), "#9aa0a6", 1.0);
  }

  canvas.text(ml, 20, report.clip_id + "  (mds " + std::to_string(report.mds).substr(0, 6) +
                          ", predicted " + (report.predicted_label ? "fake" : "real") + ")",
              12, "#111");
  canvas.text(ml + pw / 2, H - 8, "time [s]", 11, "#333", "middle");
  canvas.save(path);
}

}  // namespace mds
