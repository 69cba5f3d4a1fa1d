// Copyright (c) 2026 mds contributors
// SPDX-License-Identifier: Apache-2.0
#include "mds/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mds/error.hpp"
#include "mds/svg.hpp"

namespace fs = std::filesystem;

namespace mds {

double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  check_usage(scores.size() == labels.size(), "auc: scores/labels size mismatch");
  check_usage(!scores.empty(), "auc: empty input");
  std::int64_t n1 = 0;
  for (int y : labels) {
    check_usage(y == 0 || y == 1, "auc: labels must be 0 or 1");
    n1 += y;
  }
  const auto n = static_cast<std::int64_t>(scores.size());
  const std::int64_t n0 = n - n1;
  check_usage(n0 > 0 && n1 > 0, "auc: both classes required");

  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Average ranks over tie groups, then the rank-sum statistic.
  double rank_sum_fake = 0.0;
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && scores[idx[j + 1]] == scores[idx[i]]) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k)
      if (labels[idx[k]] == 1) rank_sum_fake += avg_rank;
    i = j + 1;
  }
  const double u1 = rank_sum_fake - static_cast<double>(n1) * (static_cast<double>(n1) + 1.0) / 2.0;
  return u1 / (static_cast<double>(n0) * static_cast<double>(n1));
}

double frame_wise_auc(const std::vector<double>& scores, const std::vector<int>& labels,
                      const std::vector<std::int64_t>& frame_counts) {
  check_usage(scores.size() == frame_counts.size(), "frame auc: frame_counts size mismatch");
  std::vector<double> fscores;
  std::vector<int> flabels;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    check_usage(frame_counts[i] > 0, "frame auc: frame counts must be positive");
    for (std::int64_t f = 0; f < frame_counts[i]; ++f) {
      fscores.push_back(scores[i]);
      flabels.push_back(labels[i]);
    }
  }
  return auc(fscores, flabels);
}

LocalizationMetrics metrics_from_counts(std::int64_t tp, std::int64_t fp, std::int64_t fn,
                                        std::int64_t tn) {
  LocalizationMetrics m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  m.tn = tn;
  if (tp + fp + fn == 0) {
    // No fake segments anywhere and none predicted: perfect agreement.
    m.precision = m.recall = m.f1 = 1.0;
    return m;
  }
  m.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  m.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  m.f1 = m.precision + m.recall > 0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                                    : 0.0;
  return m;
}

namespace {

double span_duration(const std::vector<SpanLabel>& spans) {
  check_usage(!spans.empty(), "localization metrics: empty span list");
  return spans.back().end_s;
}

int segment_label_from_spans(const std::vector<SpanLabel>& spans, double t0, double t1) {
  double fake = 0.0;
  for (const auto& s : spans)
    if (s.label == 1) fake += std::max(0.0, std::min(t1, s.end_s) - std::max(t0, s.start_s));
  return fake > 0.5 * (t1 - t0) ? 1 : 0;
}

void accumulate_confusion(const std::vector<SpanLabel>& pred, const std::vector<SpanLabel>& truth,
                          double segment_s, std::int64_t& tp, std::int64_t& fp, std::int64_t& fn,
                          std::int64_t& tn) {
  const double dur_p = span_duration(pred);
  const double dur_t = span_duration(truth);
  check_usage(std::abs(dur_p - dur_t) < 1e-6,
              "localization metrics: span lists cover different durations");
  const auto n = static_cast<std::int64_t>(std::llround(dur_p / segment_s));
  check_usage(n >= 1, "localization metrics: duration shorter than one segment");
  for (std::int64_t t = 0; t < n; ++t) {
    const double t0 = static_cast<double>(t) * segment_s;
    const double t1 = t0 + segment_s;
    const int p = segment_label_from_spans(pred, t0, t1);
    const int g = segment_label_from_spans(truth, t0, t1);
    if (p == 1 && g == 1) ++tp;
    else if (p == 1 && g == 0) ++fp;
    else if (p == 0 && g == 1) ++fn;
    else ++tn;
  }
}

}  // namespace

LocalizationMetrics localization_metrics(const std::vector<SpanLabel>& spans_pred,
                                         const std::vector<SpanLabel>& span_truth,
                                         double segment_s) {
  std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
  accumulate_confusion(spans_pred, span_truth, segment_s, tp, fp, fn, tn);
  return metrics_from_counts(tp, fp, fn, tn);
}

EvalReport evaluate_split(const CorpusManifest& manifest, Stream& visual, Stream& audio,
                          const FeatureConfig& fcfg, const VisualStats* stats,
                          const std::string& split, std::optional<double> tau_override,
                          bool median_filter) {
  EvalReport report;

  double tau;
  if (tau_override) {
    tau = *tau_override;
  } else {
    std::vector<std::pair<double, int>> train_scores;
    for (const auto& id : manifest.ids_in_split("train")) {
      const ClipRecord clip = load_clip(manifest, id);
      train_scores.emplace_back(score_clip(visual, audio, clip, fcfg, stats).mds, clip.label);
    }
    check_data(!train_scores.empty(),
               "eval: train split is empty; cannot calibrate a threshold (pass one explicitly)");
    tau = calibrate_threshold(train_scores);
  }
  report.tau = tau;

  std::vector<double> scores;
  std::vector<int> labels;
  std::vector<std::int64_t> frame_counts;
  std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
  bool any_truth = false;

  const auto ids = manifest.ids_in_split(split);
  check_data(!ids.empty(), "eval: split '" + split + "' is empty");
  for (const auto& id : ids) {
    const ClipRecord clip = load_clip(manifest, id);
    const ClipScore cs = score_clip(visual, audio, clip, fcfg, stats);
    ScoreReport r = make_score_report(id, cs, tau, std::nullopt, fcfg.segment_s, median_filter);
    scores.push_back(cs.mds);
    labels.push_back(clip.label);
    frame_counts.push_back(clip.frame_count());
    if (!clip.span_truth.empty()) {
      any_truth = true;
      accumulate_confusion(r.spans, clip.span_truth, fcfg.segment_s, tp, fp, fn, tn);
    }
    report.reports.push_back(std::move(r));
  }

  report.n_scored = static_cast<int>(scores.size());
  report.auc_video = auc(scores, labels);
  report.auc_frame = frame_wise_auc(scores, labels, frame_counts);
  if (any_truth) {
    report.has_localization = true;
    report.localization = metrics_from_counts(tp, fp, fn, tn);
  }
  return report;
}

nlohmann::json eval_report_to_json(const EvalReport& report) {
  nlohmann::json j{{"auc_video", report.auc_video},
                   {"auc_frame", report.auc_frame},
                   {"tau", report.tau},
                   {"n_scored", report.n_scored}};
  if (report.has_localization)
    j["localization"] = {{"precision", report.localization.precision},
                         {"recall", report.localization.recall},
                         {"f1", report.localization.f1},
                         {"tp", report.localization.tp},
                         {"fp", report.localization.fp},
                         {"fn", report.localization.fn},
                         {"tn", report.localization.tn}};
  nlohmann::json clips = nlohmann::json::array();
  for (const auto& r : report.reports) clips.push_back(report_to_json(r));
  j["clips"] = clips;
  return j;
}

AblationReport ablate(const std::vector<ClipRecord>& clips,
                      const std::map<std::string, std::string>& split, const FeatureConfig& fcfg,
                      const StreamConfig& visual_cfg, const StreamConfig& audio_cfg,
                      const TrainConfig& base, const std::vector<std::array<double, 3>>& lambda_grid,
                      const fs::path& work_dir) {
  check_usage(!lambda_grid.empty(), "ablate: empty lambda grid");
  for (const auto& l : lambda_grid)
    check_usage(l[0] >= 0 && l[1] >= 0 && l[2] >= 0 && l[0] + l[1] + l[2] > 0,
                "ablate: each lambda triple needs a nonzero component");

  AblationReport report;
  report.seed = base.seed;
  const TrainData data = build_train_data(clips, split, fcfg);

  // Featurize the test split once.
  struct TestClip {
    int label;
    std::vector<SegmentPair> segments;
  };
  std::vector<TestClip> test_clips;
  for (const auto& clip : clips) {
    const auto it = split.find(clip.clip_id);
    if (it == split.end() || it->second != "test") continue;
    test_clips.push_back({clip.label, segment_clip(clip, fcfg)});
  }
  check_usage(!test_clips.empty(), "ablate: test split is empty");
  const VisualStats* stats = data.has_visual_stats ? &data.visual_stats : nullptr;

  for (std::size_t cell_idx = 0; cell_idx < lambda_grid.size(); ++cell_idx) {
    const auto& l = lambda_grid[cell_idx];
    AblationCell cell;
    cell.objective = base.objective;
    cell.objective.lambda1 = l[0];
    cell.objective.lambda2 = l[1];
    cell.objective.lambda3 = l[2];
    char name[64];
    std::snprintf(name, sizeof(name), "l1=%g,l2=%g,l3=%g", l[0], l[1], l[2]);
    cell.name = name;

    try {
      TrainConfig tcfg = base;  // shared seed across cells: differences reflect lambdas only
      tcfg.objective = cell.objective;
      Trainer trainer(data, fcfg, visual_cfg, audio_cfg, tcfg,
                      work_dir / ("cell_" + std::to_string(cell_idx)));
      trainer.run();

      const bool use_mds = cell.objective.lambda1 > 0;
      const bool head_visual = cell.objective.lambda2 > 0;
      std::vector<double> scores;
      std::vector<int> labels;
      for (const auto& tc : test_clips) {
        double score;
        if (use_mds) {
          double sum = 0.0;
          for (const auto& seg : tc.segments) {
            const EmbeddingPair pair =
                forward_pair(trainer.visual(), trainer.audio(), seg, fcfg, data.fps, stats);
            sum += dissimilarity(pair.f_v, pair.f_a);
          }
          score = sum / static_cast<double>(tc.segments.size());
        } else {
          // Single-stream configs: maximum head probability over segments.
          score = 0.0;
          for (const auto& seg : tc.segments) {
            const EmbeddingPair pair =
                forward_pair(trainer.visual(), trainer.audio(), seg, fcfg, data.fps, stats);
            score = std::max(score, head_visual ? pair.p_v : pair.p_a);
          }
        }
        scores.push_back(score);
        labels.push_back(tc.label);
      }
      cell.auc_value = auc(scores, labels);
    } catch (const std::exception& e) {
      cell.failed = true;
      cell.error = e.what();
    }
    report.cells.push_back(std::move(cell));
  }
  return report;
}

nlohmann::json ablation_report_to_json(const AblationReport& report) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : report.cells)
    cells.push_back(nlohmann::json{{"name", c.name},
                                   {"lambda1", c.objective.lambda1},
                                   {"lambda2", c.objective.lambda2},
                                   {"lambda3", c.objective.lambda3},
                                   {"auc", c.failed ? nlohmann::json(nullptr)
                                                    : nlohmann::json(c.auc_value)},
                                   {"failed", c.failed},
                                   {"error", c.error}});
  return nlohmann::json{{"seed", report.seed}, {"cells", cells}};
}

std::string ablation_table(const AblationReport& report) {
  std::string out = "configuration            AUC\n";
  out += "-----------------------  ------\n";
  for (const auto& c : report.cells) {
    char line[96];
    if (c.failed)
      std::snprintf(line, sizeof(line), "%-23s  FAILED (%s)\n", c.name.c_str(), c.error.c_str());
    else
      std::snprintf(line, sizeof(line), "%-23s  %.4f\n", c.name.c_str(), c.auc_value);
    out += line;
  }
  return out;
}

void write_mds_distribution_svg(const std::vector<std::pair<double, int>>& scores, double tau,
                                const fs::path& path) {
  check_usage(!scores.empty(), "distribution plot: empty scores");
  double lo = 1e300, hi = -1e300;
  for (const auto& [s, y] : scores) {
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  hi = std::max(hi, tau);
  lo = std::min(lo, tau);
  if (hi - lo < 1e-12) hi = lo + 1.0;
  const int bins = 24;
  std::vector<int> count0(bins, 0), count1(bins, 0);
  for (const auto& [s, y] : scores) {
    int b = static_cast<int>((s - lo) / (hi - lo) * bins);
    b = std::clamp(b, 0, bins - 1);
    (y == 0 ? count0 : count1)[static_cast<std::size_t>(b)] += 1;
  }
  int peak = 1;
  for (int b = 0; b < bins; ++b) peak = std::max({peak, count0[b], count1[b]});

  const double W = 560, H = 300, ml = 46, mr = 14, mt = 28, mb = 36;
  const double pw = W - ml - mr, ph = H - mt - mb;
  svg::Canvas canvas(W, H);
  const double bw = pw / bins;
  for (int b = 0; b < bins; ++b) {
    const double h0 = ph * count0[b] / peak;
    const double h1 = ph * count1[b] / peak;
    canvas.rect(ml + b * bw, mt + ph - h0, bw - 1, h0, "#1565c0", 0.55);
    canvas.rect(ml + b * bw, mt + ph - h1, bw - 1, h1, "#c62828", 0.55);
  }
  const double xt = ml + pw * (tau - lo) / (hi - lo);
  canvas.line(xt, mt, xt, mt + ph, "#333", 1.5, "6,4");
  canvas.text(xt + 4, mt + 12, "tau", 10, "#333");
  canvas.line(ml, mt + ph, ml + pw, mt + ph, "#444");
  char lbl[32];
  std::snprintf(lbl, sizeof(lbl), "%.3f", lo);
  canvas.text(ml, mt + ph + 14, lbl, 10, "#333", "middle");
  std::snprintf(lbl, sizeof(lbl), "%.3f", hi);
  canvas.text(ml + pw, mt + ph + 14, lbl, 10, "#333", "middle");
  canvas.text(ml, 16, "MDS distribution (blue real, red fake)", 12, "#111");
  canvas.save(path);
}

}  // namespace mds
